#pragma once

// Deterministic random-write workloads over the memory models, timing and
// accounted footprint, and report I/O (table, CSV, JSON lines).

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "attach_stobj/memory.hpp"
#include "attach_stobj/rng.hpp"

namespace attach_stobj {

class InvalidWorkload : public std::invalid_argument {
public:
    explicit InvalidWorkload(const std::string& what)
        : std::invalid_argument("InvalidWorkload: " + what) {}
};

struct WorkloadSpec {
    MemoryKind model = MemoryKind::Symmetric;
    std::string label = "low";  // "low"/"high" in the suite; free text otherwise
    std::uint64_t n_writes = 20000;
    Address base_addr = 0;
    std::uint64_t range_len = std::uint64_t{1} << 24;
    Byte value = 1;
    std::uint64_t seed = 1;
    MemoryParams params;

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

struct BenchReport {
    WorkloadSpec spec;
    double elapsed_seconds = 0.0;
    std::uint64_t footprint_bytes = 0;
    std::uint64_t distinct_addresses = 0;
    bool verified = false;

    friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

/// True when every field other than elapsed_seconds matches.
inline bool same_except_elapsed(const BenchReport& a, const BenchReport& b) {
    BenchReport x = a;
    x.elapsed_seconds = b.elapsed_seconds;
    return x == b;
}

inline void validate(const WorkloadSpec& spec) {
    if (spec.n_writes == 0) throw InvalidWorkload("n_writes must be positive");
    if (spec.range_len == 0 || !std::has_single_bit(spec.range_len)) {
        throw InvalidWorkload("range_len must be a power of two, got " +
                              std::to_string(spec.range_len));
    }
    const unsigned bits = spec.params.addr_bits;
    if (bits < 16 || bits > 64) throw InvalidWorkload("addr_bits must be in [16, 64]");
    if (spec.base_addr > std::numeric_limits<Address>::max() - (spec.range_len - 1)) {
        throw InvalidWorkload("base_addr + range_len overflows 64 bits");
    }
    if (bits < 64) {
        const std::uint64_t limit = std::uint64_t{1} << bits;
        if (spec.range_len > limit || spec.base_addr > limit - spec.range_len) {
            throw InvalidWorkload("base_addr + range_len exceeds 2^" + std::to_string(bits));
        }
    }
}

/// k-th address = base_addr + (k-th splitmix64 output mod range_len).
inline std::vector<Address> gen_addresses(const WorkloadSpec& spec) {
    validate(spec);
    SplitMix64 rng{spec.seed};
    const std::uint64_t mask = spec.range_len - 1;
    std::vector<Address> out;
    out.reserve(static_cast<std::size_t>(spec.n_writes));
    for (std::uint64_t k = 0; k < spec.n_writes; ++k) out.push_back(spec.base_addr + (rng.next() & mask));
    return out;
}

struct BenchOptions {
    unsigned warmup = 1;
    unsigned repeats = 3;  // best-of
};

/// Times the writes only (construction and read-back are excluded). Reports
/// the best of `repeats` timed runs after `warmup` untimed ones.
inline BenchReport run_benchmark(const WorkloadSpec& spec, const BenchOptions& opts = {}) {
    const auto addrs = gen_addresses(spec);
    const unsigned runs = opts.warmup + std::max(1u, opts.repeats);

    double best = std::numeric_limits<double>::infinity();
    std::optional<Memory> last;
    for (unsigned run = 0; run < runs; ++run) {
        last.reset();
        Memory mem = make_memory(spec.model, spec.params);
        const Byte value = spec.value;
        const auto t0 = std::chrono::steady_clock::now();
        mem.visit([&](auto& m) {
            for (Address a : addrs) m.write_byte(a, value);
        });
        const auto t1 = std::chrono::steady_clock::now();
        if (run >= opts.warmup) best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        last.emplace(std::move(mem));
    }

    BenchReport report;
    report.spec = spec;
    report.elapsed_seconds = best;
    report.footprint_bytes = last->footprint();
    report.distinct_addresses =
        std::unordered_set<Address>(addrs.begin(), addrs.end()).size();
    report.verified = last->visit([&](const auto& m) {
        return std::all_of(addrs.begin(), addrs.end(),
                           [&](Address a) { return m.read_byte(a) == spec.value; });
    });
    return report;
}

struct SuiteParams {
    std::uint64_t n_writes = 20000;
    std::uint64_t range_len = std::uint64_t{1} << 24;
    std::optional<Address> high_base;  // default 6 * range_len
    Byte value = 1;
    std::uint64_t seed = 1;
    MemoryParams params;
    BenchOptions options;
    bool parallel = false;

    Address effective_high_base() const { return high_base.value_or(6 * range_len); }
};

/// The six workloads in table order: {symmetric, asymmetric, attached} x {low, high}.
inline std::vector<WorkloadSpec> suite_specs(const SuiteParams& p) {
    std::vector<WorkloadSpec> specs;
    for (MemoryKind kind : {MemoryKind::Symmetric, MemoryKind::Asymmetric, MemoryKind::Attached}) {
        for (bool high : {false, true}) {
            WorkloadSpec s;
            s.model = kind;
            s.label = high ? "high" : "low";
            s.n_writes = p.n_writes;
            s.base_addr = high ? p.effective_high_base() : 0;
            s.range_len = p.range_len;
            s.value = p.value;
            s.seed = p.seed;
            s.params = p.params;
            specs.push_back(s);
        }
    }
    return specs;
}

inline std::vector<BenchReport> run_suite(const SuiteParams& p) {
    const auto specs = suite_specs(p);
    for (const auto& s : specs) validate(s);
    std::vector<BenchReport> reports(specs.size());
    if (p.parallel) {
        std::vector<std::exception_ptr> errors(specs.size());
        {
            std::vector<std::jthread> workers;
            for (std::size_t i = 0; i < specs.size(); ++i) {
                workers.emplace_back([&, i] {
                    try {
                        reports[i] = run_benchmark(specs[i], p.options);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    } else {
        for (std::size_t i = 0; i < specs.size(); ++i) reports[i] = run_benchmark(specs[i], p.options);
    }
    return reports;
}

// ---- report formats -------------------------------------------------------

namespace detail {

inline std::string shortest(double d) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, r.ptr);
}

template <class T>
T parse_number(std::string_view s, std::string_view field) {
    T v{};
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw std::runtime_error("bad value for " + std::string(field) + ": '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        cols.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cols;
}

}  // namespace detail

inline constexpr std::string_view kCsvHeader =
    "memory,benchmark,n_writes,base_addr,range_len,value,seed,addr_bits,page_bits,flat_len,"
    "elapsed_seconds,footprint_bytes,distinct_addresses,verified";

inline std::string to_csv(const std::vector<BenchReport>& reports) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : reports) {
        const auto& s = r.spec;
        out << to_string(s.model) << ',' << s.label << ',' << s.n_writes << ',' << s.base_addr << ','
            << s.range_len << ',' << unsigned(s.value) << ',' << s.seed << ',' << s.params.addr_bits
            << ',' << s.params.page_bits << ',' << s.params.flat_len << ','
            << detail::shortest(r.elapsed_seconds) << ',' << r.footprint_bytes << ','
            << r.distinct_addresses << ',' << (r.verified ? "true" : "false") << '\n';
    }
    return out.str();
}

inline std::vector<BenchReport> parse_csv(std::string_view text) {
    std::vector<BenchReport> out;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("missing CSV header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c = detail::split_csv_line(line);
        if (c.size() != 14) throw std::runtime_error("CSV row has " + std::to_string(c.size()) + " columns");
        using detail::parse_number;
        BenchReport r;
        r.spec.model = parse_memory_kind(c[0]);
        r.spec.label = std::string(c[1]);
        r.spec.n_writes = parse_number<std::uint64_t>(c[2], "n_writes");
        r.spec.base_addr = parse_number<std::uint64_t>(c[3], "base_addr");
        r.spec.range_len = parse_number<std::uint64_t>(c[4], "range_len");
        r.spec.value = static_cast<Byte>(parse_number<unsigned>(c[5], "value"));
        r.spec.seed = parse_number<std::uint64_t>(c[6], "seed");
        r.spec.params.addr_bits = parse_number<unsigned>(c[7], "addr_bits");
        r.spec.params.page_bits = parse_number<unsigned>(c[8], "page_bits");
        r.spec.params.flat_len = parse_number<std::uint64_t>(c[9], "flat_len");
        r.elapsed_seconds = parse_number<double>(c[10], "elapsed_seconds");
        r.footprint_bytes = parse_number<std::uint64_t>(c[11], "footprint_bytes");
        r.distinct_addresses = parse_number<std::uint64_t>(c[12], "distinct_addresses");
        if (c[13] != "true" && c[13] != "false") throw std::runtime_error("bad verified value");
        r.verified = c[13] == "true";
        out.push_back(std::move(r));
    }
    return out;
}

inline nlohmann::json to_json(const BenchReport& r) {
    const auto& s = r.spec;
    return {
        {"spec",
         {{"memory", to_string(s.model)},
          {"benchmark", s.label},
          {"n_writes", s.n_writes},
          {"base_addr", s.base_addr},
          {"range_len", s.range_len},
          {"value", s.value},
          {"seed", s.seed},
          {"addr_bits", s.params.addr_bits},
          {"page_bits", s.params.page_bits},
          {"flat_len", s.params.flat_len}}},
        {"elapsed_seconds", r.elapsed_seconds},
        {"footprint_bytes", r.footprint_bytes},
        {"distinct_addresses", r.distinct_addresses},
        {"verified", r.verified},
    };
}

inline BenchReport report_from_json(const nlohmann::json& j) {
    BenchReport r;
    const auto& s = j.at("spec");
    r.spec.model = parse_memory_kind(s.at("memory").get<std::string>());
    r.spec.label = s.at("benchmark").get<std::string>();
    r.spec.n_writes = s.at("n_writes").get<std::uint64_t>();
    r.spec.base_addr = s.at("base_addr").get<std::uint64_t>();
    r.spec.range_len = s.at("range_len").get<std::uint64_t>();
    r.spec.value = s.at("value").get<Byte>();
    r.spec.seed = s.at("seed").get<std::uint64_t>();
    r.spec.params.addr_bits = s.at("addr_bits").get<unsigned>();
    r.spec.params.page_bits = s.at("page_bits").get<unsigned>();
    r.spec.params.flat_len = s.at("flat_len").get<std::uint64_t>();
    r.elapsed_seconds = j.at("elapsed_seconds").get<double>();
    r.footprint_bytes = j.at("footprint_bytes").get<std::uint64_t>();
    r.distinct_addresses = j.at("distinct_addresses").get<std::uint64_t>();
    r.verified = j.at("verified").get<bool>();
    return r;
}

inline std::string to_jsonl(const std::vector<BenchReport>& reports) {
    std::string out;
    for (const auto& r : reports) out += to_json(r).dump() + '\n';
    return out;
}

inline std::vector<BenchReport> parse_jsonl(std::string_view text) {
    std::vector<BenchReport> out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(report_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

inline std::string to_table(const std::vector<BenchReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "Memory" << std::setw(11) << "Benchmark" << std::right
        << std::setw(13) << "Time (secs)" << std::setw(16) << "Size (bytes)" << '\n';
    out << std::string(52, '-') << '\n';
    for (const auto& r : reports) {
        out << std::left << std::setw(12) << to_string(r.spec.model) << std::setw(11) << r.spec.label
            << std::right << std::setw(13) << std::fixed << std::setprecision(4) << r.elapsed_seconds
            << std::setw(16) << r.footprint_bytes << (r.verified ? "" : "  UNVERIFIED") << '\n';
    }
    out << "Size is accounted allocation (pages, nodes, flat region, list records), "
           "not resident set size.\n";
    return out.str();
}

}  // namespace attach_stobj
