#pragma once

// Oracle-equivalence fuzzing: replay one random read/write sequence through
// several memories and report the first read that disagrees with the oracle.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "attach_stobj/memory.hpp"
#include "attach_stobj/rng.hpp"

namespace attach_stobj {

struct FuzzOp {
    bool write = false;
    Address addr = 0;
    Byte value = 0;
};

/// Draws addresses from four pools: anywhere in the flat region, a bounded
/// set of high addresses (keeps the association list short enough to fuzz
/// 10^5 ops quickly), a window straddling the flat/high boundary, and a
/// small hot set at the bottom of memory. Prefix-stable in `count`.
inline std::vector<FuzzOp> gen_fuzz_ops(std::uint64_t seed, std::uint64_t count,
                                        const MemoryParams& params) {
    if (params.addr_bits < 16 || params.addr_bits > 64) throw InvalidParams("addr_bits must be in [16, 64]");
    if (params.flat_len < 256 ||
        (params.addr_bits < 64 && params.flat_len > (std::uint64_t{1} << (params.addr_bits - 1)))) {
        throw InvalidParams("fuzzing needs 256 <= flat_len <= 2^(addr_bits - 1)");
    }
    constexpr std::uint64_t kHighPool = 4096;
    const std::uint64_t high_mask = (std::uint64_t{1} << (params.addr_bits - 1)) - 1;
    const std::uint64_t flat_mask = params.flat_len - 1;

    SplitMix64 rng{seed};
    std::vector<FuzzOp> ops;
    ops.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t r = rng.next();
        FuzzOp op;
        op.write = (r & 1) != 0;
        op.value = static_cast<Byte>(r >> 8);
        const std::uint64_t pick = rng.next();
        switch ((r >> 1) & 3) {
            case 0:
                op.addr = pick & flat_mask;
                break;
            case 1:
                op.addr = params.flat_len + (SplitMix64::step(pick % kHighPool).first & high_mask);
                break;
            case 2:
                op.addr = params.flat_len - 128 + (pick & 255);
                break;
            default:
                op.addr = pick & 255;
                break;
        }
        ops.push_back(op);
    }
    return ops;
}

/// Type-erased handle so test fixtures can join the replay.
struct FuzzTarget {
    std::string name;
    std::function<Byte(Address)> read;
    std::function<void(Address, Byte)> write;
};

template <MemoryModel M>
FuzzTarget fuzz_target(std::string name, M& model) {
    return {std::move(name), [&model](Address a) { return model.read_byte(a); },
            [&model](Address a, Byte v) { model.write_byte(a, v); }};
}

inline FuzzTarget fuzz_target(std::string name, Memory& mem) {
    return {std::move(name), [&mem](Address a) { return mem.read_byte(a); },
            [&mem](Address a, Byte v) { mem.write_byte(a, v); }};
}

struct Divergence {
    std::uint64_t op_index = 0;
    std::string target;
    Address addr = 0;
    Byte expected = 0;
    Byte actual = 0;
};

struct FuzzResult {
    std::uint64_t ops_run = 0;
    std::optional<Divergence> divergence;

    bool ok() const { return !divergence; }
};

/// Replays `ops` through the oracle and every target. Stops at the first
/// read where a target disagrees with the oracle; every op up to and
/// including `op_index` is needed to reproduce it.
inline FuzzResult run_fuzz(const std::vector<FuzzOp>& ops, std::vector<FuzzTarget>& targets) {
    OracleMemory oracle;
    FuzzResult result;
    for (std::uint64_t i = 0; i < ops.size(); ++i) {
        const auto& op = ops[i];
        if (op.write) {
            oracle.write_byte(op.addr, op.value);
            for (auto& t : targets) t.write(op.addr, op.value);
        } else {
            const Byte expected = oracle.read_byte(op.addr);
            for (auto& t : targets) {
                const Byte got = t.read(op.addr);
                if (got != expected) {
                    result.ops_run = i + 1;
                    result.divergence = Divergence{i, t.name, op.addr, expected, got};
                    return result;
                }
            }
        }
    }
    result.ops_run = ops.size();
    return result;
}

/// Test fixture: behaves like the oracle except that it stores val + 1 at
/// the 16 lowest addresses.
class OffByOneMemory {
public:
    Byte read_byte(Address addr) const { return inner_.read_byte(addr); }
    void write_byte(Address addr, Byte val) {
        inner_.write_byte(addr, addr < 16 ? static_cast<Byte>(val + 1) : val);
    }
    std::uint64_t footprint() const { return 0; }

private:
    OracleMemory inner_;
};

}  // namespace attach_stobj
