#include "sdb/sim/clock.hpp"

#include <string>

namespace sdb::sim {

Clock::EventId Clock::schedule_at(Micros at, std::function<void()> fn) {
    EventId id{std::max(at, now_), seq_++};
    queue_.emplace(id, std::move(fn));
    return id;
}

bool Clock::cancel(const EventId& id) { return queue_.erase(id) > 0; }

bool Clock::fire_next(std::size_t& fired) {
    if (queue_.empty()) return false;
    if (fired >= cap_) throw EventCapExceeded("event cap of " + std::to_string(cap_) + " exceeded");
    auto it = queue_.begin();
    now_ = it->first.first;
    auto fn = std::move(it->second);
    queue_.erase(it);
    ++fired;
    ++fired_total_;
    fn();
    return true;
}

std::size_t Clock::advance(Micros until) {
    std::size_t fired = 0;
    while (!queue_.empty() && queue_.begin()->first.first <= until) fire_next(fired);
    if (until > now_) now_ = until;
    return fired;
}

Micros Clock::run_until_idle() {
    std::size_t fired = 0;
    while (fire_next(fired)) {
    }
    return now_;
}

Micros Clock::run_until(const std::function<bool()>& done) {
    std::size_t fired = 0;
    while (!done() && fire_next(fired)) {
    }
    return now_;
}

}  // namespace sdb::sim
