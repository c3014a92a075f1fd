// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds are fixed here and must not be tuned per machine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "attach_stobj/attach_stobj.hpp"

using namespace attach_stobj;

namespace {

constexpr std::uint64_t k2_24 = std::uint64_t{1} << 24;

struct Check {
    std::ostringstream notes;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
bool throws_registry(RegistryErrc code, F&& fn) {
    try {
        fn();
    } catch (const RegistryError& e) {
        return e.code() == code;
    }
    return false;
}

AbstractObjectSpec obj(const std::string& name, const std::string& tag, bool attachable,
                       bool non_exec = false, const std::string& logic = "p$a") {
    return {name, tag + "$f", {{"p{" + tag + "}", logic, "p{" + tag + "}$c", 2}}, attachable, non_exec, {}};
}

// 1. registry semantics
void criterion_registry(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Registry base = Registry{}.define_object(obj("IMPL", "impl", false, true));

    Registry defined = base.define_object(obj("ST", "st", true));
    c.expect(throws_registry(RegistryErrc::StAlreadyDefined, [&] { (void)defined.attach("ST", "IMPL"); }),
             "attach after define");
    c.expect(throws_registry(RegistryErrc::ImplUndefined, [&] { (void)base.attach("ST", "GHOST"); }),
             "impl undefined");
    Registry pending = base.attach("ST", "IMPL");
    c.expect(throws_registry(RegistryErrc::DuplicateAttachment, [&] { (void)pending.attach("ST", "IMPL"); }),
             "duplicate attach");

    Registry chain = Registry{}
                         .define_object(obj("IMPL2", "impl2", false))
                         .attach("IMPL", "IMPL2")
                         .define_object(obj("IMPL", "impl", true))
                         .attach("ST", "IMPL")
                         .define_object(obj("ST", "st", true));
    c.expect(chain.resolve_attachment("ST", true) == Identifier("IMPL2"), "chain resolution");
    c.expect(chain.effective_binding("ST").effective_exec == std::vector<Identifier>{"p{impl2}$c"},
             "chain exec is IMPL2's");
    c.expect(chain.effective_binding("ST").provenance == Provenance(AttachedVia{{"IMPL", "IMPL2"}}),
             "chain provenance");

    c.expect(throws_registry(RegistryErrc::SignatureMismatch,
                             [&] { (void)pending.define_object(obj("ST", "st", true, false, "q$a")); }),
             "logic mismatch rejected");
    Registry attached = pending.define_object(obj("ST", "st", true));
    c.expect(attached.effective_binding("ST").effective_exec == std::vector<Identifier>{"p{impl}$c"},
             "attached exec substitution");

    c.expect(!base.has_global("IMPL"), "non-executable has no global");
    Registry with_global = base.add_global_object("IMPL");
    c.expect(with_global.has_global("IMPL"), "add_global_object creates global");
    c.expect(throws_registry(RegistryErrc::AlreadyGlobal, [&] { (void)with_global.add_global_object("IMPL"); }),
             "second add_global_object");
    c.expect(throws_registry(RegistryErrc::AlreadyGlobal, [&] { (void)defined.add_global_object("ST"); }),
             "executable object already global");
    c.expect(throws_registry(RegistryErrc::Undefined, [&] { (void)base.add_global_object("GHOST"); }),
             "add_global_object undefined");

    const double t = seconds_since(t0);
    c.notes << " runtime=" << t << "s";
    c.expect(t < 1.0, "runtime < 1 s");
}

// Independent chain follower over a plain entry list.
std::optional<Identifier> brute_resolve(const std::vector<std::pair<Identifier, Identifier>>& entries,
                                        const Identifier& st, bool top) {
    Identifier cur = st;
    bool moved = false;
    for (std::size_t guard = 0; guard <= entries.size(); ++guard) {
        const Identifier* next = nullptr;
        for (const auto& e : entries) {
            if (e.first == cur) next = &e.second;
        }
        if (!next) break;
        cur = *next;
        moved = true;
    }
    if (!moved && top) return std::nullopt;
    return cur;
}

// 2. resolution equivalence over random acyclic tables
void criterion_resolution(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(2);
    std::size_t divergences = 0;
    for (int tc = 0; tc < 10000; ++tc) {
        const std::size_t pool = 2 + gen() % 60;
        std::vector<Identifier> names;
        for (std::size_t i = 0; i < pool; ++i) names.push_back("S" + std::to_string(i));
        std::shuffle(names.begin(), names.end(), gen);
        // entries only point "forward" in the shuffled order, so the table is acyclic
        AttachmentTable table;
        std::vector<std::pair<Identifier, Identifier>> entries;
        const std::size_t want = gen() % 51;
        for (std::size_t k = 0; k < want * 2 && entries.size() < want; ++k) {
            const std::size_t a = gen() % (pool - 1);
            const std::size_t b = a + 1 + gen() % (pool - 1 - a);
            if (table.contains(names[a])) continue;
            table.insert(names[a], names[b]);
            entries.emplace_back(names[a], names[b]);
        }
        for (const auto& n : names) {
            for (bool top : {true, false}) {
                if (table.resolve(n, top) != brute_resolve(entries, n, top)) ++divergences;
            }
        }
    }
    const double t = seconds_since(t0);
    c.notes << " cases=10000 divergences=" << divergences << " runtime=" << t << "s";
    c.expect(divergences == 0, "zero divergences");
    c.expect(t < 5.0, "runtime < 5 s");
}

// 3. oracle equivalence
void criterion_oracle(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const MemoryParams params;
    const auto ops = gen_fuzz_ops(2024, 100000, params);
    Memory sym = make_memory(MemoryKind::Symmetric, params);
    Memory asym = make_memory(MemoryKind::Asymmetric, params);
    Memory att = make_memory(MemoryKind::Attached, params);
    std::vector<FuzzTarget> targets{fuzz_target("symmetric", sym), fuzz_target("asymmetric", asym),
                                    fuzz_target("attached", att)};
    const auto r = run_fuzz(ops, targets);
    const double t = seconds_since(t0);
    c.notes << " ops=" << r.ops_run << " runtime=" << t << "s";
    c.expect(r.ok(), r.ok() ? "" : "divergence in " + r.divergence->target);
    c.expect(r.ops_run == 100000, "all ops replayed");
    c.expect(t < 10.0, "runtime < 10 s");
}

const BenchReport& row(const std::vector<BenchReport>& rs, MemoryKind k, const std::string& label) {
    for (const auto& r : rs) {
        if (r.spec.model == k && r.spec.label == label) return r;
    }
    throw std::logic_error("missing suite row");
}

std::uint64_t distinct_high(const WorkloadSpec& s) {
    std::set<Address> seen;
    for (Address a : gen_addresses(s)) {
        if (a >= s.params.flat_len) seen.insert(a);
    }
    return seen.size();
}

// 4. qualitative reproduction of the six-run table
void criterion_table(Check& c, const std::vector<BenchReport>& rs, double suite_seconds) {
    const auto& sl = row(rs, MemoryKind::Symmetric, "low");
    const auto& sh = row(rs, MemoryKind::Symmetric, "high");
    const auto& al = row(rs, MemoryKind::Asymmetric, "low");
    const auto& ah = row(rs, MemoryKind::Asymmetric, "high");

    const double sym_diff = std::abs(sl.elapsed_seconds - sh.elapsed_seconds) /
                            std::min(sl.elapsed_seconds, sh.elapsed_seconds);
    c.notes << " asym low/high=" << al.elapsed_seconds << "/" << ah.elapsed_seconds
            << "s sym low/high=" << sl.elapsed_seconds << "/" << sh.elapsed_seconds
            << "s sym footprint=" << sl.footprint_bytes << " suite=" << suite_seconds << "s";
    c.expect(al.elapsed_seconds < 0.2 * ah.elapsed_seconds, "(a) asym low < 0.2 x asym high");
    c.expect(sym_diff < 0.30, "(b) symmetric low/high differ < 30%");
    c.expect(sl.footprint_bytes == sh.footprint_bytes, "(c) symmetric footprints identical");
    c.expect(al.footprint_bytes == al.spec.params.flat_len, "(d) asym low footprint = flat_len");
    c.expect(ah.footprint_bytes == ah.spec.params.flat_len + 32 * distinct_high(ah.spec),
             "(e) asym high footprint = flat_len + 32 x distinct high");
    bool verified = true;
    for (const auto& r : rs) verified = verified && r.verified;
    c.expect(verified, "all rows verified");
    c.expect(suite_seconds < 60.0, "suite runtime < 60 s");
}

// 5. attached costs about the same as direct
void criterion_no_indirection(Check& c, const std::vector<BenchReport>& rs) {
    const auto& ah = row(rs, MemoryKind::Asymmetric, "high");
    const auto& th = row(rs, MemoryKind::Attached, "high");
    const double ratio = th.elapsed_seconds / ah.elapsed_seconds;
    c.notes << " attached/asymmetric high=" << ratio;
    c.expect(std::abs(ratio - 1.0) <= 0.20, "attached within 20% of asymmetric");
    c.expect(th.footprint_bytes == ah.footprint_bytes, "footprints identical");
    c.expect(th.distinct_addresses == ah.distinct_addresses, "distinct addresses identical");
    Memory att = make_memory(MemoryKind::Attached);
    c.expect(std::holds_alternative<AsymmetricMemory>(att.backing()), "attached holds the model directly");
}

// 6. quadratic high region
void criterion_quadratic(Check& c) {
    SuiteParams p;
    auto specs = suite_specs(p);
    WorkloadSpec s = specs[3];  // asymmetric high
    auto r1 = run_benchmark(s);
    s.n_writes *= 2;
    auto r2 = run_benchmark(s);
    const double ratio = r2.elapsed_seconds / r1.elapsed_seconds;
    c.notes << " t(20000)=" << r1.elapsed_seconds << "s t(40000)=" << r2.elapsed_seconds << "s ratio=" << ratio;
    c.expect(ratio >= 3.0 && ratio <= 5.0, "ratio in [3, 5]");
}

// 7. loader cache rule
void criterion_loader(Check& c) {
    Loader fixtures(filesystem_source(BOOKS_DIR));
    auto plain = fixtures.load_book({}, "unattached.book");
    auto attached = fixtures.load_book({}, "attached.book");
    c.expect(plain.trace_log.size() == 1 && plain.trace_log[0].to_string() == "f -> p$c", "unattached trace");
    c.expect(attached.trace_log.size() == 1 && attached.trace_log[0].to_string() == "f -> p{impl}$c",
             "attached trace");
    c.expect(attached.rebind_set.contains("f"), "f in rebind set");

    std::mt19937_64 gen(77);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string ops;
        const int n = 1 + static_cast<int>(gen() % 5);
        for (int k = 0; k < n; ++k) ops += (k ? "," : "") + std::string("x") + std::to_string(gen()) + "$c";
        Loader l(memory_source({
            {"impl.book", "defimpl IMPL foundation=impl$c prims=p{impl}:p$a:p{impl}$c:2 non-executable\n"},
            {"b_st.book",
             "defabs ST foundation=st$c prims=p:p$a:p$c:2 attachable\ndefun f on=ST calls=p\ncache f exec=" +
                 ops + "\n"},
            {"top.book", "include impl.book\nattach ST IMPL\ninclude b_st.book\ninvoke f\n"},
        }));
        auto ctx = l.load_book({}, "top.book");
        if (ctx.trace_log.back().to_string() != "f -> p{impl}$c") ++bad;
    }
    c.notes << " property cases=1000 cache-dependent=" << bad;
    c.expect(bad == 0, "attached binding independent of cache");
}

// 8. determinism
void criterion_determinism(Check& c, const std::vector<BenchReport>& first) {
    const auto second = run_suite(SuiteParams{});
    bool same = first.size() == second.size();
    for (std::size_t i = 0; same && i < first.size(); ++i) same = same_except_elapsed(first[i], second[i]);
    c.expect(same, "reports identical except elapsed_seconds");
    // also through the serialized form
    auto strip = [](std::vector<BenchReport> rs) {
        for (auto& r : rs) r.elapsed_seconds = 0;
        return to_jsonl(rs);
    };
    c.expect(strip(first) == strip(second), "serialized reports identical");
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<void(Check&)>& fn) {
        Check c;
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.ok = false;
            c.notes << " [exception: " << e.what() << "]";
        }
        std::cout << (c.ok ? "PASS" : "FAIL") << "  C" << id << " " << name << ":" << c.notes.str() << std::endl;
        if (!c.ok) ++failures;
    };

    report(1, "registry semantics", criterion_registry);
    report(2, "resolution equivalence", criterion_resolution);
    report(3, "oracle equivalence", criterion_oracle);

    std::vector<BenchReport> suite;
    double suite_seconds = 0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        suite = run_suite(SuiteParams{});
        suite_seconds = seconds_since(t0);
        std::cout << to_table(suite);
    }
    report(4, "six-run table reproduction", [&](Check& c) { criterion_table(c, suite, suite_seconds); });
    report(5, "no indirection", [&](Check& c) { criterion_no_indirection(c, suite); });
    report(6, "quadratic high region", criterion_quadratic);
    report(7, "loader cache rule", criterion_loader);
    report(8, "determinism", [&](Check& c) { criterion_determinism(c, suite); });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
