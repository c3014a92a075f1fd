#pragma once

// Byte-addressable memories sharing one logical signature:
//   read_byte(addr) -> byte, write_byte(addr, val), footprint() -> bytes.
// Unwritten addresses read as zero. Footprints are accounted bookkeeping,
// deterministic in the operation history.

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <forward_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "attach_stobj/registry.hpp"

namespace attach_stobj {

using Address = std::uint64_t;
using Byte = std::uint8_t;

class AddressOutOfRange : public std::out_of_range {
public:
    AddressOutOfRange(Address addr, unsigned addr_bits)
        : std::out_of_range("AddressOutOfRange: 0x" + to_hex(addr) + " needs more than " +
                            std::to_string(addr_bits) + " address bits"),
          addr_(addr) {}

    Address address() const noexcept { return addr_; }

private:
    static std::string to_hex(Address a) {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s;
        do {
            s.insert(s.begin(), digits[a & 0xf]);
            a >>= 4;
        } while (a);
        return s;
    }

    Address addr_;
};

class InvalidParams : public std::invalid_argument {
public:
    explicit InvalidParams(const std::string& what) : std::invalid_argument("InvalidParams: " + what) {}
};

template <class M>
concept MemoryModel = requires(M m, const M cm, Address a, Byte v) {
    { cm.read_byte(a) } -> std::same_as<Byte>;
    { m.write_byte(a, v) } -> std::same_as<void>;
    { cm.footprint() } -> std::same_as<std::uint64_t>;
};

/// Brute-force reference. Not benchmarked; footprint is always zero.
class OracleMemory {
public:
    Byte read_byte(Address addr) const {
        auto it = store_.find(addr);
        return it == store_.end() ? Byte{0} : it->second;
    }

    void write_byte(Address addr, Byte val) { store_[addr] = val; }

    std::uint64_t footprint() const { return 0; }

private:
    std::unordered_map<Address, Byte> store_;
};

/// Radix tree of lazily allocated, zero-filled pages. Every address costs
/// the same number of steps regardless of where it lives.
///
/// The page number is split into levels of `kLevelBits` index bits, with any
/// remainder at the root. The root is allocated up front; other nodes and
/// pages appear on first write beneath them. Each allocated node is charged
/// 8 bytes per child slot.
class SymmetricMemory {
public:
    static constexpr unsigned kLevelBits = 9;
    static constexpr std::uint64_t kSlotBytes = 8;

    explicit SymmetricMemory(unsigned addr_bits = 32, unsigned page_bits = 12)
        : addr_bits_(addr_bits), page_bits_(page_bits) {
        if (addr_bits < 16 || addr_bits > 64) {
            throw InvalidParams("addr_bits must be in [16, 64], got " + std::to_string(addr_bits));
        }
        if (page_bits < 1 || page_bits > 30 || page_bits >= addr_bits) {
            throw InvalidParams("page_bits must be in [1, min(30, addr_bits - 1)], got " +
                                std::to_string(page_bits));
        }
        const unsigned index_bits = addr_bits - page_bits;
        const unsigned levels = (index_bits + kLevelBits - 1) / kLevelBits;
        level_bits_.assign(levels, kLevelBits);
        level_bits_.front() = index_bits - kLevelBits * (levels - 1);
        level_shift_.assign(levels, 0);
        for (std::size_t k = levels - 1; k-- > 0;) level_shift_[k] = level_shift_[k + 1] + level_bits_[k + 1];
        root_ = make_node(0);
    }

    unsigned addr_bits() const { return addr_bits_; }
    unsigned page_bits() const { return page_bits_; }
    std::size_t levels() const { return level_bits_.size(); }
    std::uint64_t allocated_pages() const { return allocated_pages_; }
    std::uint64_t node_bytes() const { return node_bytes_; }

    Byte read_byte(Address addr) const {
        check(addr);
        const Node* node = root_.get();
        std::uint64_t page = addr >> page_bits_;
        for (std::size_t lvl = 0; lvl + 1 < level_bits_.size(); ++lvl) {
            node = node->children[slot(page, lvl)].get();
            if (!node) return 0;
        }
        const auto& p = node->pages[slot(page, level_bits_.size() - 1)];
        return p ? p[offset(addr)] : Byte{0};
    }

    void write_byte(Address addr, Byte val) {
        check(addr);
        Node* node = root_.get();
        std::uint64_t page = addr >> page_bits_;
        for (std::size_t lvl = 0; lvl + 1 < level_bits_.size(); ++lvl) {
            auto& child = node->children[slot(page, lvl)];
            if (!child) child = make_node(lvl + 1);
            node = child.get();
        }
        auto& p = node->pages[slot(page, level_bits_.size() - 1)];
        if (!p) {
            p = std::make_unique<Byte[]>(std::size_t{1} << page_bits_);
            ++allocated_pages_;
        }
        p[offset(addr)] = val;
    }

    std::uint64_t footprint() const {
        return (allocated_pages_ << page_bits_) + node_bytes_;
    }

private:
    struct Node {
        std::vector<std::unique_ptr<Node>> children;  // interior levels
        std::vector<std::unique_ptr<Byte[]>> pages;   // last level
    };

    std::unique_ptr<Node> make_node(std::size_t lvl) {
        auto n = std::make_unique<Node>();
        const std::size_t slots = std::size_t{1} << level_bits_[lvl];
        if (lvl + 1 < level_bits_.size()) {
            n->children.resize(slots);
        } else {
            n->pages.resize(slots);
        }
        node_bytes_ += kSlotBytes * slots;
        return n;
    }

    void check(Address addr) const {
        if (addr_bits_ < 64 && (addr >> addr_bits_) != 0) throw AddressOutOfRange(addr, addr_bits_);
    }

    std::size_t slot(std::uint64_t page, std::size_t lvl) const {
        return static_cast<std::size_t>((page >> level_shift_[lvl]) & ((std::uint64_t{1} << level_bits_[lvl]) - 1));
    }

    std::size_t offset(Address addr) const {
        return static_cast<std::size_t>(addr & ((Address{1} << page_bits_) - 1));
    }

    unsigned addr_bits_;
    unsigned page_bits_;
    std::vector<unsigned> level_bits_;
    std::vector<unsigned> level_shift_;
    std::unique_ptr<Node> root_;
    std::uint64_t allocated_pages_ = 0;
    std::uint64_t node_bytes_ = 0;
};

/// Eager flat region for addresses below `flat_len`, association list above.
/// High-region accesses scan the list from the newest record, so n distinct
/// high writes cost O(n^2) in total.
class AsymmetricMemory {
public:
    static constexpr std::uint64_t kEntryOverhead = 32;

    explicit AsymmetricMemory(std::uint64_t flat_len = std::uint64_t{1} << 24) : flat_len_(flat_len) {
        if (flat_len == 0 || !std::has_single_bit(flat_len)) {
            throw InvalidParams("flat_len must be a power of two, got " + std::to_string(flat_len));
        }
        if (flat_len > (std::uint64_t{1} << 34)) {
            throw InvalidParams("flat_len larger than 2^34 is not supported");
        }
        flat_.assign(static_cast<std::size_t>(flat_len), 0);
    }

    std::uint64_t flat_len() const { return flat_len_; }
    std::uint64_t high_entries() const { return high_len_; }

    Byte read_byte(Address addr) const {
        if (addr < flat_len_) return flat_[static_cast<std::size_t>(addr)];
        for (const auto& rec : high_) {
            if (rec.addr == addr) return rec.val;
        }
        return 0;
    }

    void write_byte(Address addr, Byte val) {
        if (addr < flat_len_) {
            flat_[static_cast<std::size_t>(addr)] = val;
            return;
        }
        for (auto& rec : high_) {
            if (rec.addr == addr) {
                rec.val = val;
                return;
            }
        }
        high_.push_front({addr, val});
        ++high_len_;
    }

    std::uint64_t footprint() const { return flat_len_ + kEntryOverhead * high_len_; }

private:
    struct Record {
        Address addr;
        Byte val;
    };

    std::uint64_t flat_len_;
    std::vector<Byte> flat_;
    std::forward_list<Record> high_;  // newest first, no duplicate addresses
    std::uint64_t high_len_ = 0;
};

static_assert(MemoryModel<OracleMemory>);
static_assert(MemoryModel<SymmetricMemory>);
static_assert(MemoryModel<AsymmetricMemory>);

enum class MemoryKind { Oracle, Symmetric, Asymmetric, Attached };

inline std::string_view to_string(MemoryKind k) {
    switch (k) {
        case MemoryKind::Oracle: return "oracle";
        case MemoryKind::Symmetric: return "symmetric";
        case MemoryKind::Asymmetric: return "asymmetric";
        case MemoryKind::Attached: return "attached";
    }
    return "unknown";
}

inline MemoryKind parse_memory_kind(std::string_view s) {
    if (s == "oracle") return MemoryKind::Oracle;
    if (s == "symmetric") return MemoryKind::Symmetric;
    if (s == "asymmetric") return MemoryKind::Asymmetric;
    if (s == "attached") return MemoryKind::Attached;
    throw InvalidParams("unknown memory kind '" + std::string(s) + "'");
}

struct MemoryParams {
    unsigned addr_bits = 32;
    unsigned page_bits = 12;
    std::uint64_t flat_len = std::uint64_t{1} << 24;

    friend bool operator==(const MemoryParams&, const MemoryParams&) = default;
};

/// Object names and foundations used when building memories through the
/// registry. The symmetric spec is the attachable one; the asymmetric spec
/// is the implementation that may be attached to it.
namespace bigmem {

inline constexpr std::string_view kSymmetricName = "bigmem::mem";
inline constexpr std::string_view kAsymmetricName = "bigmem-asymmetric::mem";
inline constexpr std::string_view kSymmetricFoundation = "bigmem::pages";
inline constexpr std::string_view kAsymmetricFoundation = "bigmem-asymmetric::flat+alist";

inline AbstractObjectSpec symmetric_spec(bool attachable = true) {
    return {std::string(kSymmetricName),
            std::string(kSymmetricFoundation),
            {{"read-byte", "read-byte$a", "read-byte$c", 2},
             {"write-byte", "write-byte$a", "write-byte$c", 3},
             {"footprint", "footprint$a", "footprint$c", 1}},
            attachable,
            false,
            {}};
}

inline AbstractObjectSpec asymmetric_spec(bool non_executable = true) {
    return {std::string(kAsymmetricName),
            std::string(kAsymmetricFoundation),
            {{"read-byte{asym}", "read-byte$a", "read-byte{asym}$c", 2},
             {"write-byte{asym}", "write-byte$a", "write-byte{asym}$c", 3},
             {"footprint{asym}", "footprint$a", "footprint{asym}$c", 1}},
            false,
            non_executable,
            {}};
}

/// Registry state after: define asymmetric impl, attach it to the symmetric
/// name, define the attachable symmetric spec.
inline Registry attached_registry() {
    Registry r;
    r = r.define_object(asymmetric_spec());
    r = r.attach(std::string(kSymmetricName), std::string(kAsymmetricName));
    r = r.define_object(symmetric_spec());
    return r;
}

}  // namespace bigmem

/// A memory instance. The concrete model is held by value, so an attached
/// instance is exactly as direct as the model it resolved to.
class Memory {
public:
    using Backing = std::variant<OracleMemory, SymmetricMemory, AsymmetricMemory>;

    Memory(MemoryKind kind, Backing backing, std::optional<ResolvedBinding> binding = std::nullopt)
        : kind_(kind), backing_(std::move(backing)), binding_(std::move(binding)) {}

    MemoryKind kind() const { return kind_; }
    const Backing& backing() const { return backing_; }
    const std::optional<ResolvedBinding>& binding() const { return binding_; }

    /// Runs `f` on the concrete model; one dispatch per call, not per byte.
    template <class F>
    decltype(auto) visit(F&& f) {
        return std::visit(std::forward<F>(f), backing_);
    }
    template <class F>
    decltype(auto) visit(F&& f) const {
        return std::visit(std::forward<F>(f), backing_);
    }

    Byte read_byte(Address addr) const {
        return visit([&](const auto& m) { return m.read_byte(addr); });
    }
    void write_byte(Address addr, Byte val) {
        visit([&](auto& m) { m.write_byte(addr, val); });
    }
    std::uint64_t footprint() const {
        return visit([](const auto& m) { return m.footprint(); });
    }

private:
    MemoryKind kind_;
    Backing backing_;
    std::optional<ResolvedBinding> binding_;
};

inline Memory::Backing backing_for_foundation(std::string_view foundation, const MemoryParams& p) {
    if (foundation == bigmem::kSymmetricFoundation) return SymmetricMemory(p.addr_bits, p.page_bits);
    if (foundation == bigmem::kAsymmetricFoundation) return AsymmetricMemory(p.flat_len);
    throw InvalidParams("no memory model for foundation '" + std::string(foundation) + "'");
}

/// Builds a memory of the requested kind. `Attached` goes through the
/// registry and constructs whatever the symmetric spec's effective
/// foundation names, which is the asymmetric model.
inline Memory make_memory(MemoryKind kind, const MemoryParams& params = {}) {
    switch (kind) {
        case MemoryKind::Oracle:
            return Memory(kind, OracleMemory{});
        case MemoryKind::Symmetric:
            return Memory(kind, SymmetricMemory(params.addr_bits, params.page_bits));
        case MemoryKind::Asymmetric:
            return Memory(kind, AsymmetricMemory(params.flat_len));
        case MemoryKind::Attached: {
            // Validate symmetric parameters too: the attached object still
            // answers to the symmetric spec's address space.
            if (params.addr_bits < 16 || params.addr_bits > 64) {
                throw InvalidParams("addr_bits must be in [16, 64]");
            }
            auto reg = bigmem::attached_registry();
            const auto& binding = reg.effective_binding(std::string(bigmem::kSymmetricName));
            return Memory(kind, backing_for_foundation(binding.effective_foundation, params),
                          binding);
        }
    }
    throw InvalidParams("unknown memory kind");
}

}  // namespace attach_stobj
