#pragma once

// Book scripts: line-oriented definition files loaded with include-once
// semantics. Functions defined over an attached object ignore any shipped
// compiled cache and are rebound from the object's effective binding.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "attach_stobj/registry.hpp"

namespace attach_stobj {

struct DefineObject {
    AbstractObjectSpec spec;
    friend bool operator==(const DefineObject&, const DefineObject&) = default;
};
struct Attach {
    Identifier st;
    Identifier impl;
    friend bool operator==(const Attach&, const Attach&) = default;
};
struct Include {
    std::string path;
    friend bool operator==(const Include&, const Include&) = default;
};
struct DefineFunction {
    Identifier fname;
    Identifier object;
    std::vector<Identifier> calls;
    friend bool operator==(const DefineFunction&, const DefineFunction&) = default;
};
struct CacheEntry {
    Identifier fname;
    std::vector<Identifier> exec_ops;
    friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};
struct Invoke {
    Identifier fname;
    friend bool operator==(const Invoke&, const Invoke&) = default;
};

using EventBody = std::variant<DefineObject, Attach, Include, DefineFunction, CacheEntry, Invoke>;

struct BookEvent {
    EventBody body;
    std::size_t line = 0;
    friend bool operator==(const BookEvent&, const BookEvent&) = default;
};

struct Book {
    std::string path;
    std::vector<BookEvent> events;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

enum class LoadErrc {
    Registry,
    Parse,
    BookNotFound,
    IncludeCycle,
    CacheWithoutFunction,
    UnknownPrimitive,
    UnknownFunction,
    DuplicateFunction,
};

inline std::string_view to_string(LoadErrc e) {
    switch (e) {
        case LoadErrc::Registry: return "Registry";
        case LoadErrc::Parse: return "ParseError";
        case LoadErrc::BookNotFound: return "BookNotFound";
        case LoadErrc::IncludeCycle: return "IncludeCycle";
        case LoadErrc::CacheWithoutFunction: return "CacheWithoutFunction";
        case LoadErrc::UnknownPrimitive: return "UnknownPrimitive";
        case LoadErrc::UnknownFunction: return "UnknownFunction";
        case LoadErrc::DuplicateFunction: return "DuplicateFunction";
    }
    return "Unknown";
}

/// Load failure with the book and line where it happened. Registry failures
/// keep their original code in registry_code().
class LoadError : public std::runtime_error {
public:
    LoadError(LoadErrc code, std::string book, std::size_t line, const std::string& detail,
              std::optional<RegistryErrc> registry_code = std::nullopt)
        : std::runtime_error(book + ":" + std::to_string(line) + ": " +
                             (code == LoadErrc::Registry ? std::string() :
                                                           std::string(to_string(code)) + ": ") +
                             detail),
          code_(code),
          book_(std::move(book)),
          line_(line),
          registry_code_(registry_code) {}

    LoadErrc code() const noexcept { return code_; }
    const std::string& book() const noexcept { return book_; }
    std::size_t line() const noexcept { return line_; }
    std::optional<RegistryErrc> registry_code() const noexcept { return registry_code_; }

private:
    LoadErrc code_;
    std::string book_;
    std::size_t line_;
    std::optional<RegistryErrc> registry_code_;
};

namespace detail {

struct Token {
    std::string_view text;
    std::size_t column;  // 1-based
};

inline std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size() || line[i] == '#') break;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' &&
               line[i] != '#')
            ++i;
        out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::optional<std::string_view> value_of(std::string_view token, std::string_view key) {
    if (token.size() > key.size() && token.substr(0, key.size()) == key &&
        token[key.size()] == '=') {
        return token.substr(key.size() + 1);
    }
    return std::nullopt;
}

inline std::vector<std::string> parse_list(const Token& tok, std::string_view value,
                                           std::size_t line) {
    auto items = split(value, ',');
    for (const auto& item : items) {
        if (item.empty()) throw ParseError(line, tok.column, "empty list element in '" +
                                                                 std::string(tok.text) + "'");
    }
    return items;
}

inline std::vector<PrimitiveSig> parse_prims(const Token& tok, std::string_view value,
                                             std::size_t line) {
    std::vector<PrimitiveSig> prims;
    for (const auto& item : parse_list(tok, value, line)) {
        auto parts = split(item, ':');
        if (parts.size() != 4) {
            throw ParseError(line, tok.column,
                             "primitive '" + item + "' must be EXP:LOGIC:EXEC:ARITY");
        }
        for (std::size_t k = 0; k < 3; ++k) {
            if (parts[k].empty()) {
                throw ParseError(line, tok.column, "empty identifier in primitive '" + item + "'");
            }
        }
        std::size_t arity = 0;
        const auto& digits = parts[3];
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos ||
            digits.size() > 9) {
            throw ParseError(line, tok.column, "bad arity in primitive '" + item + "'");
        }
        arity = std::stoul(digits);
        prims.push_back({parts[0], parts[1], parts[2], arity});
    }
    return prims;
}

inline DefineObject parse_object(const std::vector<Token>& toks, std::size_t line,
                                 bool allow_attachable) {
    const auto& directive = toks[0];
    if (toks.size() < 2) throw ParseError(line, directive.column, "missing object name");
    AbstractObjectSpec spec;
    spec.name = std::string(toks[1].text);
    bool have_foundation = false;
    bool have_prims = false;
    for (std::size_t i = 2; i < toks.size(); ++i) {
        const auto& tok = toks[i];
        if (auto v = value_of(tok.text, "foundation")) {
            if (v->empty()) throw ParseError(line, tok.column, "empty foundation");
            spec.foundation = std::string(*v);
            have_foundation = true;
        } else if (auto v = value_of(tok.text, "prims")) {
            spec.primitives = parse_prims(tok, *v, line);
            have_prims = true;
        } else if (auto v = value_of(tok.text, "children"); v && allow_attachable) {
            spec.children = parse_list(tok, *v, line);
        } else if (tok.text == "attachable" && allow_attachable) {
            spec.attachable = true;
        } else if (tok.text == "non-executable") {
            spec.non_executable = true;
        } else {
            throw ParseError(line, tok.column, "unexpected token '" + std::string(tok.text) +
                                                   "' in " + std::string(directive.text));
        }
    }
    if (!have_foundation) throw ParseError(line, directive.column, "missing foundation=");
    if (!have_prims) throw ParseError(line, directive.column, "missing prims=");
    return DefineObject{std::move(spec)};
}

inline void expect_count(const std::vector<Token>& toks, std::size_t n, std::size_t line,
                         std::string_view usage) {
    if (toks.size() != n) {
        std::size_t col = toks.size() > n ? toks[n].column : toks.back().column;
        throw ParseError(line, col, "usage: " + std::string(usage));
    }
}

}  // namespace detail

/// Parses book text. Events come back in textual order, each tagged with its
/// 1-based line number.
inline Book parse_book(std::string_view text, std::string path = {}) {
    Book book{std::move(path), {}};
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;

        auto toks = detail::tokenize(line);
        if (toks.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto& d = toks[0].text;
        EventBody body;
        if (d == "defabs") {
            body = detail::parse_object(toks, line_no, true);
        } else if (d == "defimpl") {
            body = detail::parse_object(toks, line_no, false);
        } else if (d == "attach") {
            detail::expect_count(toks, 3, line_no, "attach ST IMPL");
            body = Attach{std::string(toks[1].text), std::string(toks[2].text)};
        } else if (d == "include") {
            detail::expect_count(toks, 2, line_no, "include PATH");
            body = Include{std::string(toks[1].text)};
        } else if (d == "defun") {
            detail::expect_count(toks, 4, line_no, "defun FNAME on=OBJNAME calls=EXP[,...]");
            auto on = detail::value_of(toks[2].text, "on");
            if (!on || on->empty()) throw ParseError(line_no, toks[2].column, "expected on=OBJNAME");
            auto calls = detail::value_of(toks[3].text, "calls");
            if (!calls) throw ParseError(line_no, toks[3].column, "expected calls=EXP[,...]");
            body = DefineFunction{std::string(toks[1].text), std::string(*on),
                                  detail::parse_list(toks[3], *calls, line_no)};
        } else if (d == "cache") {
            detail::expect_count(toks, 3, line_no, "cache FNAME exec=EXECOP[,...]");
            auto exec = detail::value_of(toks[2].text, "exec");
            if (!exec) throw ParseError(line_no, toks[2].column, "expected exec=EXECOP[,...]");
            body = CacheEntry{std::string(toks[1].text),
                              detail::parse_list(toks[2], *exec, line_no)};
        } else if (d == "invoke") {
            detail::expect_count(toks, 2, line_no, "invoke FNAME");
            body = Invoke{std::string(toks[1].text)};
        } else {
            throw ParseError(line_no, toks[0].column, "unknown directive '" + std::string(d) + "'");
        }
        book.events.push_back({std::move(body), line_no});
        if (end == text.size()) break;
    }
    return book;
}

struct TraceRecord {
    Identifier fname;
    std::vector<Identifier> exec_ops;

    std::string to_string() const {
        std::string out = fname + " -> ";
        for (std::size_t i = 0; i < exec_ops.size(); ++i) {
            if (i) out += ',';
            out += exec_ops[i];
        }
        return out;
    }

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct LoadContext {
    Registry registry;
    std::map<Identifier, std::vector<Identifier>> function_bindings;
    std::set<std::string> loaded_books;
    std::vector<TraceRecord> trace_log;
    std::set<Identifier> rebind_set;  // functions whose shipped cache is ignored

    friend bool operator==(const LoadContext&, const LoadContext&) = default;
};

/// Maps a normalized book path to its text, or nullopt when absent.
using BookSource = std::function<std::optional<std::string>(const std::string&)>;

inline BookSource filesystem_source(std::filesystem::path root) {
    return [root = std::move(root)](const std::string& path) -> std::optional<std::string> {
        std::ifstream in(root / path, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
}

inline BookSource memory_source(std::map<std::string, std::string> books) {
    return [books = std::move(books)](const std::string& path) -> std::optional<std::string> {
        auto it = books.find(path);
        if (it == books.end()) return std::nullopt;
        return it->second;
    };
}

inline std::string normalize_book_path(const std::string& path) {
    return std::filesystem::path(path).lexically_normal().generic_string();
}

/// Appends a trace record for `fname` listing its bound exec ops.
inline TraceRecord invoke(LoadContext& ctx, const Identifier& fname) {
    auto it = ctx.function_bindings.find(fname);
    if (it == ctx.function_bindings.end()) {
        throw LoadError(LoadErrc::UnknownFunction, "<invoke>", 0, fname + " is not defined");
    }
    ctx.trace_log.push_back({fname, it->second});
    return ctx.trace_log.back();
}

class Loader {
public:
    explicit Loader(BookSource source) : source_(std::move(source)) {}

    [[nodiscard]] LoadContext load_book(LoadContext ctx, const std::string& path) const {
        std::vector<std::string> in_progress;
        load(ctx, normalize_book_path(path), in_progress, "<root>", 0);
        return ctx;
    }

private:
    void load(LoadContext& ctx, const std::string& path, std::vector<std::string>& in_progress,
              const std::string& from_book, std::size_t from_line) const {
        for (const auto& p : in_progress) {
            if (p == path) {
                throw LoadError(LoadErrc::IncludeCycle, from_book, from_line,
                                "include cycle through " + path);
            }
        }
        if (ctx.loaded_books.contains(path)) return;

        auto text = source_(path);
        if (!text) throw LoadError(LoadErrc::BookNotFound, from_book, from_line, path);
        Book book;
        try {
            book = parse_book(*text, path);
        } catch (const ParseError& e) {
            throw LoadError(LoadErrc::Parse, path, e.line(), e.what());
        }

        in_progress.push_back(path);
        std::set<Identifier> defined_here;
        for (const auto& ev : book.events) {
            try {
                apply(ctx, book, ev, defined_here, in_progress);
            } catch (const RegistryError& e) {
                throw LoadError(LoadErrc::Registry, path, ev.line, e.what(), e.code());
            }
        }
        in_progress.pop_back();
        ctx.loaded_books.insert(path);
    }

    void apply(LoadContext& ctx, const Book& book, const BookEvent& ev,
               std::set<Identifier>& defined_here, std::vector<std::string>& in_progress) const {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, DefineObject>) {
                    ctx.registry = ctx.registry.define_object(e.spec);
                } else if constexpr (std::is_same_v<T, Attach>) {
                    ctx.registry = ctx.registry.attach(e.st, e.impl);
                } else if constexpr (std::is_same_v<T, Include>) {
                    auto base = std::filesystem::path(book.path).parent_path();
                    load(ctx, normalize_book_path((base / e.path).generic_string()), in_progress,
                         book.path, ev.line);
                } else if constexpr (std::is_same_v<T, DefineFunction>) {
                    define_function(ctx, book, ev.line, e);
                    defined_here.insert(e.fname);
                } else if constexpr (std::is_same_v<T, CacheEntry>) {
                    if (!defined_here.contains(e.fname)) {
                        throw LoadError(LoadErrc::CacheWithoutFunction, book.path, ev.line,
                                        "no earlier defun " + e.fname + " in this book");
                    }
                    if (!ctx.rebind_set.contains(e.fname)) {
                        ctx.function_bindings[e.fname] = e.exec_ops;
                    }
                } else if constexpr (std::is_same_v<T, Invoke>) {
                    if (!ctx.function_bindings.contains(e.fname)) {
                        throw LoadError(LoadErrc::UnknownFunction, book.path, ev.line,
                                        e.fname + " is not defined");
                    }
                    invoke(ctx, e.fname);
                }
            },
            ev.body);
    }

    static void define_function(LoadContext& ctx, const Book& book, std::size_t line,
                                const DefineFunction& fn) {
        if (ctx.function_bindings.contains(fn.fname)) {
            throw LoadError(LoadErrc::DuplicateFunction, book.path, line, fn.fname);
        }
        const auto& spec = ctx.registry.spec(fn.object);
        const auto& binding = ctx.registry.effective_binding(fn.object);
        std::vector<Identifier> ops;
        ops.reserve(fn.calls.size());
        for (const auto& call : fn.calls) {
            auto idx = spec.primitive_index(call);
            if (!idx) {
                throw LoadError(LoadErrc::UnknownPrimitive, book.path, line,
                                fn.object + " exports no primitive " + call);
            }
            ops.push_back(binding.effective_exec[*idx]);
        }
        ctx.function_bindings.emplace(fn.fname, std::move(ops));
        if (binding.is_attached()) ctx.rebind_set.insert(fn.fname);
    }

    BookSource source_;
};

}  // namespace attach_stobj
