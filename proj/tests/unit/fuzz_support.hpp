#pragma once

#include <functional>
#include <vector>

#include "sdb/codec/error.hpp"
#include "test_support.hpp"

namespace sdb::test {

struct FuzzStats {
    std::size_t inputs = 0;
    std::size_t accepted = 0;
    std::size_t typed_errors = 0;
    std::size_t other_exceptions = 0;
};

/// Feeds `count` inputs to `decode`: half pure random buffers, half mutations (bit flips,
/// truncation, byte splices) of the valid seed frames. Anything other than a clean return or
/// a codec::DecodeError counts as a failure.
inline FuzzStats fuzz_decoder(std::uint64_t seed, std::size_t count, const std::vector<Bytes>& seeds,
                              const std::function<void(const Bytes&)>& decode) {
    Gen gen(seed);
    FuzzStats stats;
    Bytes input;
    for (std::size_t i = 0; i < count; ++i) {
        if (seeds.empty() || gen.coin()) {
            input = gen.bytes(gen.below(400));
        } else {
            input = seeds[gen.below(seeds.size())];
            std::size_t edits = 1 + gen.below(6);
            for (std::size_t e = 0; e < edits && !input.empty(); ++e) {
                switch (gen.below(4)) {
                    case 0: input[gen.below(input.size())] ^= std::uint8_t(1u << gen.below(8)); break;
                    case 1: input.resize(gen.below(input.size() + 1)); break;
                    case 2: input[gen.below(input.size())] = std::uint8_t(gen.u32()); break;
                    default: {
                        auto extra = gen.bytes(gen.below(16));
                        input.insert(input.begin() + long(gen.below(input.size() + 1)), extra.begin(),
                                     extra.end());
                    }
                }
            }
        }
        ++stats.inputs;
        try {
            decode(input);
            ++stats.accepted;
        } catch (const codec::DecodeError&) {
            ++stats.typed_errors;
        } catch (...) {
            ++stats.other_exceptions;
        }
    }
    return stats;
}

}  // namespace sdb::test
