#pragma once

// World of abstract object definitions plus the attachment table.
//
// An attachable object may have its executable backing (exec functions and
// foundation) replaced, at definition time, by an implementation object that
// was named in an earlier `attach` event. The registry is a value: every
// operation returns a new state and leaves the receiver untouched.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace attach_stobj {

using Identifier = std::string;

enum class RegistryErrc {
    StAlreadyDefined,
    ImplUndefined,
    DuplicateAttachment,
    AlreadyDefined,
    SignatureMismatch,
    PendingAttachmentOnNonAttachable,
    Undefined,
    AlreadyGlobal,
    ChildUndefined,
    InvalidSpec,
    CyclicAttachment,
};

inline std::string_view to_string(RegistryErrc e) {
    switch (e) {
        case RegistryErrc::StAlreadyDefined: return "StAlreadyDefined";
        case RegistryErrc::ImplUndefined: return "ImplUndefined";
        case RegistryErrc::DuplicateAttachment: return "DuplicateAttachment";
        case RegistryErrc::AlreadyDefined: return "AlreadyDefined";
        case RegistryErrc::SignatureMismatch: return "SignatureMismatch";
        case RegistryErrc::PendingAttachmentOnNonAttachable:
            return "PendingAttachmentOnNonAttachable";
        case RegistryErrc::Undefined: return "Undefined";
        case RegistryErrc::AlreadyGlobal: return "AlreadyGlobal";
        case RegistryErrc::ChildUndefined: return "ChildUndefined";
        case RegistryErrc::InvalidSpec: return "InvalidSpec";
        case RegistryErrc::CyclicAttachment: return "CyclicAttachment";
    }
    return "Unknown";
}

class RegistryError : public std::runtime_error {
public:
    RegistryError(RegistryErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    RegistryErrc code() const noexcept { return code_; }

private:
    RegistryErrc code_;
};

/// One exported primitive: the name callers use, the logical function that
/// defines its meaning, and the function that actually runs.
struct PrimitiveSig {
    Identifier export_name;
    Identifier logic_id;
    Identifier exec_id;
    std::size_t arity = 0;

    friend bool operator==(const PrimitiveSig&, const PrimitiveSig&) = default;
};

struct AbstractObjectSpec {
    Identifier name;
    Identifier foundation;
    std::vector<PrimitiveSig> primitives;
    bool attachable = false;
    bool non_executable = false;
    std::vector<Identifier> children;

    std::optional<std::size_t> primitive_index(std::string_view export_name) const {
        for (std::size_t i = 0; i < primitives.size(); ++i) {
            if (primitives[i].export_name == export_name) return i;
        }
        return std::nullopt;
    }

    friend bool operator==(const AbstractObjectSpec&, const AbstractObjectSpec&) = default;
};

/// Result of check_compatible. Empty means the logic sequences agree.
struct Mismatch {
    std::size_t position = 0;
    std::string description;

    friend bool operator==(const Mismatch&, const Mismatch&) = default;
};

/// Compares the ordered (logic_id, arity) sequences. Export and exec names
/// are free to differ.
inline std::optional<Mismatch> check_compatible(const AbstractObjectSpec& attachable,
                                                const AbstractObjectSpec& impl) {
    const auto& a = attachable.primitives;
    const auto& b = impl.primitives;
    const std::size_t common = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (a[i].logic_id != b[i].logic_id || a[i].arity != b[i].arity) {
            return Mismatch{i, "position " + std::to_string(i) + ": " + attachable.name + " has " +
                                   a[i].logic_id + "/" + std::to_string(a[i].arity) + " but " +
                                   impl.name + " has " + b[i].logic_id + "/" +
                                   std::to_string(b[i].arity)};
        }
    }
    if (a.size() != b.size()) {
        return Mismatch{common, "position " + std::to_string(common) + ": " + attachable.name +
                                    " has " + std::to_string(a.size()) + " primitives but " +
                                    impl.name + " has " + std::to_string(b.size())};
    }
    return std::nullopt;
}

struct OwnProvenance {
    friend bool operator==(const OwnProvenance&, const OwnProvenance&) = default;
};

struct AttachedVia {
    std::vector<Identifier> chain;  // nonempty; last element supplied the backing

    friend bool operator==(const AttachedVia&, const AttachedVia&) = default;
};

using Provenance = std::variant<OwnProvenance, AttachedVia>;

struct ResolvedBinding {
    Identifier name;
    Identifier effective_foundation;
    std::vector<Identifier> effective_exec;
    Provenance provenance;

    bool is_attached() const { return std::holds_alternative<AttachedVia>(provenance); }

    friend bool operator==(const ResolvedBinding&, const ResolvedBinding&) = default;
};

/// Insertion-ordered name -> name map. Entries are never replaced or removed.
class AttachmentTable {
public:
    using Entry = std::pair<Identifier, Identifier>;

    bool contains(std::string_view st) const { return find(st) != nullptr; }

    const Identifier* find(std::string_view st) const {
        for (const auto& [key, value] : entries_) {
            if (key == st) return &value;
        }
        return nullptr;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    /// Unchecked insert; Registry::attach enforces the definedness rules.
    /// Rejects duplicate keys and any entry that would close a cycle.
    void insert(Identifier st, Identifier impl) {
        if (contains(st)) {
            throw RegistryError(RegistryErrc::DuplicateAttachment, st + " already has an attachment");
        }
        Identifier cursor = impl;
        for (std::size_t steps = 0; steps <= entries_.size(); ++steps) {
            if (cursor == st) {
                throw RegistryError(RegistryErrc::CyclicAttachment, st + " -> " + impl);
            }
            const Identifier* next = find(cursor);
            if (!next) break;
            cursor = *next;
        }
        entries_.emplace_back(std::move(st), std::move(impl));
    }

    /// Follows entries from `st`. At top level an object with no entry
    /// resolves to nothing; below top level it resolves to itself.
    std::optional<Identifier> resolve(const Identifier& st, bool top) const {
        const Identifier* next = find(st);
        if (next) return resolve(*next, false);
        if (top) return std::nullopt;
        return st;
    }

    /// Names visited after `st` while resolving, ending at the resolved name.
    std::vector<Identifier> chain(const Identifier& st) const {
        std::vector<Identifier> out;
        for (const Identifier* next = find(st); next; next = find(*next)) out.push_back(*next);
        return out;
    }

    friend bool operator==(const AttachmentTable&, const AttachmentTable&) = default;

private:
    std::vector<Entry> entries_;
};

/// Global instance created for an executable object: the name plus the
/// foundation its instance is built on.
struct GlobalInstance {
    Identifier name;
    Identifier foundation;

    friend bool operator==(const GlobalInstance&, const GlobalInstance&) = default;
};

class Registry {
public:
    const std::map<Identifier, AbstractObjectSpec>& defined() const { return defined_; }
    const AttachmentTable& table() const { return table_; }
    const std::map<Identifier, GlobalInstance>& globals() const { return globals_; }
    const std::map<Identifier, ResolvedBinding>& bindings() const { return bindings_; }

    bool is_defined(std::string_view name) const { return defined_.contains(Identifier(name)); }
    bool has_global(std::string_view name) const { return globals_.contains(Identifier(name)); }

    const AbstractObjectSpec& spec(const Identifier& name) const {
        auto it = defined_.find(name);
        if (it == defined_.end()) throw RegistryError(RegistryErrc::Undefined, name);
        return it->second;
    }

    [[nodiscard]] Registry attach(const Identifier& st, const Identifier& impl) const {
        if (is_defined(st)) {
            throw RegistryError(RegistryErrc::StAlreadyDefined,
                                st + " is already defined; attach must precede its definition");
        }
        if (table_.contains(st)) {
            throw RegistryError(RegistryErrc::DuplicateAttachment,
                                st + " already attached to " + *table_.find(st));
        }
        if (!is_defined(impl)) {
            throw RegistryError(RegistryErrc::ImplUndefined, impl + " is not defined");
        }
        Registry next = *this;
        next.table_.insert(st, impl);
        return next;
    }

    std::optional<Identifier> resolve_attachment(const Identifier& st, bool top) const {
        return table_.resolve(st, top);
    }

    [[nodiscard]] Registry define_object(const AbstractObjectSpec& spec) const {
        validate(spec);
        if (is_defined(spec.name)) {
            throw RegistryError(RegistryErrc::AlreadyDefined, spec.name);
        }
        for (const auto& child : spec.children) {
            if (!is_defined(child)) {
                throw RegistryError(RegistryErrc::ChildUndefined,
                                    spec.name + " names undefined child " + child);
            }
        }
        if (table_.contains(spec.name) && !spec.attachable) {
            throw RegistryError(RegistryErrc::PendingAttachmentOnNonAttachable,
                                spec.name + " has a pending attachment to " +
                                    *table_.find(spec.name) + " but is not attachable");
        }

        ResolvedBinding binding{spec.name, spec.foundation, {}, OwnProvenance{}};
        binding.effective_exec.reserve(spec.primitives.size());
        for (const auto& p : spec.primitives) binding.effective_exec.push_back(p.exec_id);

        if (spec.attachable) {
            if (auto impl = table_.resolve(spec.name, true)) {
                const auto& impl_spec = this->spec(*impl);
                if (auto mismatch = check_compatible(spec, impl_spec)) {
                    throw RegistryError(RegistryErrc::SignatureMismatch, mismatch->description);
                }
                const ResolvedBinding& impl_binding = bindings_.at(*impl);
                binding.effective_foundation = impl_binding.effective_foundation;
                binding.effective_exec = impl_binding.effective_exec;
                binding.provenance = AttachedVia{table_.chain(spec.name)};
            }
        }

        Registry next = *this;
        next.defined_.emplace(spec.name, spec);
        if (!spec.non_executable) {
            next.globals_.emplace(spec.name,
                                  GlobalInstance{spec.name, binding.effective_foundation});
        }
        next.bindings_.emplace(spec.name, std::move(binding));
        return next;
    }

    [[nodiscard]] Registry add_global_object(const Identifier& name) const {
        if (!is_defined(name)) throw RegistryError(RegistryErrc::Undefined, name);
        if (has_global(name)) throw RegistryError(RegistryErrc::AlreadyGlobal, name);
        Registry next = *this;
        next.globals_.emplace(name,
                              GlobalInstance{name, bindings_.at(name).effective_foundation});
        return next;
    }

    const ResolvedBinding& effective_binding(const Identifier& name) const {
        auto it = bindings_.find(name);
        if (it == bindings_.end()) throw RegistryError(RegistryErrc::Undefined, name);
        return it->second;
    }

    friend bool operator==(const Registry&, const Registry&) = default;

private:
    static void validate(const AbstractObjectSpec& spec) {
        if (spec.name.empty()) throw RegistryError(RegistryErrc::InvalidSpec, "empty object name");
        if (spec.foundation.empty()) {
            throw RegistryError(RegistryErrc::InvalidSpec, spec.name + ": empty foundation");
        }
        std::set<std::string_view> seen;
        for (const auto& p : spec.primitives) {
            if (p.export_name.empty() || p.logic_id.empty() || p.exec_id.empty()) {
                throw RegistryError(RegistryErrc::InvalidSpec,
                                    spec.name + ": primitive with empty identifier");
            }
            if (!seen.insert(p.export_name).second) {
                throw RegistryError(RegistryErrc::InvalidSpec,
                                    spec.name + ": duplicate export " + p.export_name);
            }
        }
    }

    std::map<Identifier, AbstractObjectSpec> defined_;
    AttachmentTable table_;
    std::map<Identifier, GlobalInstance> globals_;
    std::map<Identifier, ResolvedBinding> bindings_;
};

}  // namespace attach_stobj
