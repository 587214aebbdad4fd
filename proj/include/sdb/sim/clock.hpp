#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>

namespace sdb::sim {

/// Simulated time in microseconds.
using Micros = std::int64_t;

inline constexpr Micros ms(std::int64_t n) { return n * 1000; }
inline constexpr Micros seconds(std::int64_t n) { return n * 1'000'000; }

class EventCapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discrete-event scheduler. Events fire in (time, insertion sequence) order; time never
/// moves backwards.
class Clock {
public:
    using EventId = std::pair<Micros, std::uint64_t>;

    Micros now() const { return now_; }

    /// Times in the past are clamped to now.
    EventId schedule_at(Micros at, std::function<void()> fn);
    EventId schedule_after(Micros delay, std::function<void()> fn) { return schedule_at(now_ + delay, std::move(fn)); }
    /// False when the event already fired or was cancelled.
    bool cancel(const EventId& id);

    /// Fires every event due at or before `until`, then sets now to `until`. Returns the number
    /// fired. Subject to the event cap.
    std::size_t advance(Micros until);
    /// Fires events until none remain. Returns the final time. Throws EventCapExceeded once
    /// more than event_cap events have fired in this call.
    Micros run_until_idle();
    /// Runs until `done()` holds after an event, or the queue empties.
    Micros run_until(const std::function<bool()>& done);

    void set_event_cap(std::size_t cap) { cap_ = cap; }
    std::size_t event_cap() const { return cap_; }
    std::size_t pending() const { return queue_.size(); }
    std::uint64_t fired_total() const { return fired_total_; }

private:
    bool fire_next(std::size_t& fired);

    Micros now_ = 0;
    std::uint64_t seq_ = 1;  // {0, 0} stays free as the "no event" id
    std::uint64_t fired_total_ = 0;
    std::size_t cap_ = 50'000'000;
    std::map<EventId, std::function<void()>> queue_;
};

}  // namespace sdb::sim
