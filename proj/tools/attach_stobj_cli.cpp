// attach-stobj: benchmark, load, and fuzz front end.
//
// Exit codes: 0 success, 1 semantic or verification failure, 2 usage error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "attach_stobj/attach_stobj.hpp"

namespace {

using namespace attach_stobj;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_params(CLI::App* cmd, MemoryParams& p) {
    auto* g = cmd->add_option_group("params", "Memory model parameters");
    g->add_option("--addr-bits", p.addr_bits, "Symmetric address width in bits [16, 64]")
        ->capture_default_str();
    g->add_option("--page-bits", p.page_bits, "Symmetric page size as log2 bytes")->capture_default_str();
    g->add_option("--flat-len", p.flat_len, "Asymmetric flat region length (power of two)")
        ->capture_default_str();
}

Address parse_base(const std::string& text, std::uint64_t range_len) {
    if (text == "low") return 0;
    if (text == "high") return 6 * range_len;
    try {
        std::size_t used = 0;
        Address v = std::stoull(text, &used, 0);
        if (used != text.size()) throw UsageError("bad --base value '" + text + "'");
        return v;
    } catch (const std::logic_error&) {
        throw UsageError("bad --base value '" + text + "'");
    }
}

void print_reports(const std::vector<BenchReport>& reports, const std::string& format) {
    if (format == "json") {
        std::cout << to_jsonl(reports);
    } else if (format == "csv") {
        std::cout << to_csv(reports);
    } else {
        std::cout << to_table(reports);
    }
}

bool all_verified(const std::vector<BenchReport>& reports) {
    for (const auto& r : reports) {
        if (!r.verified) return false;
    }
    return true;
}

std::string hex(std::uint64_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << v;
    return s.str();
}

int run_load(const std::string& path) {
    const std::filesystem::path file(path);
    if (!std::filesystem::is_regular_file(file)) {
        std::cerr << "error: no such book: " << path << '\n';
        return kFailure;
    }
    Loader loader(filesystem_source(file.parent_path().empty() ? "." : file.parent_path()));
    try {
        auto ctx = loader.load_book({}, file.filename().string());
        for (const auto& rec : ctx.trace_log) std::cout << rec.to_string() << '\n';
    } catch (const LoadError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}

int run_fuzz_cmd(std::uint64_t ops_count, std::uint64_t seed, const MemoryParams& params,
                 bool broken) {
    const auto ops = gen_fuzz_ops(seed, ops_count, params);
    Memory sym = make_memory(MemoryKind::Symmetric, params);
    Memory asym = make_memory(MemoryKind::Asymmetric, params);
    Memory att = make_memory(MemoryKind::Attached, params);
    OffByOneMemory off_by_one;
    std::vector<FuzzTarget> targets{fuzz_target("symmetric", sym), fuzz_target("asymmetric", asym),
                                    fuzz_target("attached", att)};
    if (broken) targets.push_back(fuzz_target("broken", off_by_one));

    const auto result = run_fuzz(ops, targets);
    if (result.ok()) {
        std::cout << "fuzz: " << result.ops_run << " ops, " << targets.size()
                  << " models, all equal to oracle\n";
        return kOk;
    }
    const auto& d = *result.divergence;
    std::cout << "fuzz: divergence at op " << d.op_index << ": model " << d.target << " read "
              << hex(d.addr) << " -> " << unsigned(d.actual) << ", oracle " << unsigned(d.expected)
              << '\n'
              << "reproduce: fuzz --ops " << d.op_index + 1 << " --seed " << seed
              << (broken ? " --broken-model" : "") << '\n';
    return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attachable state objects: memory-model benchmarks, book loading, fuzzing"};
    app.require_subcommand(1);

    // bench
    WorkloadSpec spec;
    std::string model = "symmetric";
    std::string base = "low";
    unsigned value = 1;
    std::string format = "table";
    BenchOptions bench_opts;
    auto* bench = app.add_subcommand("bench", "Run one workload and report time and footprint");
    bench->add_option("--model", model, "oracle | symmetric | asymmetric | attached")
        ->check(CLI::IsMember({"oracle", "symmetric", "asymmetric", "attached"}))
        ->capture_default_str();
    bench->add_option("--base", base, "Base address: low (0), high (6 x range), or a number")
        ->capture_default_str();
    bench->add_option("--range", spec.range_len, "Address range length (power of two)")
        ->capture_default_str();
    bench->add_option("--writes", spec.n_writes, "Number of writes")->capture_default_str();
    bench->add_option("--value", value, "Byte value written")->check(CLI::Range(0, 255))->capture_default_str();
    bench->add_option("--seed", spec.seed, "splitmix64 seed")->capture_default_str();
    bench->add_option("--format", format, "table | csv | json")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    bench->add_option("--warmup", bench_opts.warmup, "Untimed warm-up runs")->capture_default_str();
    bench->add_option("--repeats", bench_opts.repeats, "Timed runs (best reported)")->capture_default_str();
    add_params(bench, spec.params);

    // suite
    SuiteParams suite_params;
    std::string suite_format = "table";
    std::uint64_t high_base = 0;
    auto* suite = app.add_subcommand("suite", "Run the six-row symmetric/asymmetric/attached table");
    suite->add_option("--writes", suite_params.n_writes, "Writes per row")->capture_default_str();
    suite->add_option("--range", suite_params.range_len, "Address range length (power of two)")
        ->capture_default_str();
    auto* high_opt = suite->add_option("--high-base", high_base, "Base of high rows (default 6 x range)");
    suite->add_option("--seed", suite_params.seed, "splitmix64 seed")->capture_default_str();
    suite->add_option("--format", suite_format, "table | csv | json")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    suite->add_flag("--parallel", suite_params.parallel, "Run each row on its own thread");
    suite->add_option("--warmup", suite_params.options.warmup, "Untimed warm-up runs per row")
        ->capture_default_str();
    suite->add_option("--repeats", suite_params.options.repeats, "Timed runs per row (best reported)")
        ->capture_default_str();
    add_params(suite, suite_params.params);

    // load
    std::string book_path;
    auto* load = app.add_subcommand("load", "Load a book script and print its invoke trace");
    load->add_option("book", book_path, "Path to the book file")->required();

    // fuzz
    std::uint64_t fuzz_ops = 100000;
    std::uint64_t fuzz_seed = 1;
    bool broken = false;
    MemoryParams fuzz_params;
    auto* fuzz = app.add_subcommand("fuzz", "Replay random ops through every model against the oracle");
    fuzz->add_option("--ops", fuzz_ops, "Number of operations")->capture_default_str();
    fuzz->add_option("--seed", fuzz_seed, "splitmix64 seed")->capture_default_str();
    fuzz->add_flag("--broken-model", broken, "Also replay a deliberately wrong model (harness self-test)");
    add_params(fuzz, fuzz_params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*bench) {
            spec.model = parse_memory_kind(model);
            spec.label = base;
            spec.value = static_cast<Byte>(value);
            spec.base_addr = parse_base(base, spec.range_len);
            validate(spec);
            const auto report = run_benchmark(spec, bench_opts);
            print_reports({report}, format);
            return report.verified ? kOk : kFailure;
        }
        if (*suite) {
            if (*high_opt) suite_params.high_base = high_base;
            const auto reports = run_suite(suite_params);
            print_reports(reports, suite_format);
            return all_verified(reports) ? kOk : kFailure;
        }
        if (*load) return run_load(book_path);
        if (*fuzz) return run_fuzz_cmd(fuzz_ops, fuzz_seed, fuzz_params, broken);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {  // InvalidWorkload, InvalidParams
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
