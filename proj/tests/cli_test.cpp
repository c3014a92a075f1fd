#include <sys/wait.h>

#include <cstdio>
#include <string>

#include <gtest/gtest.h>

#include "attach_stobj/bench.hpp"

using namespace attach_stobj;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

// Runs the CLI with stderr folded into stdout.
Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + CLI_PATH + "\" " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string book(const std::string& name) { return std::string("\"") + BOOKS_DIR + "/" + name + "\""; }

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST(CliBench, JsonOneLine) {
    auto r = cli("bench --model symmetric --base 0 --range 16777216 --writes 20000 --seed 7 --format json");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(lines(r.out), 1u);
    auto reports = parse_jsonl(r.out);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].verified);
    EXPECT_EQ(reports[0].spec.seed, 7u);
    EXPECT_EQ(reports[0].spec.n_writes, 20000u);
}

TEST(CliBench, AsymmetricHigh) {
    auto r = cli("bench --model asymmetric --base high --writes 2000 --format csv");
    ASSERT_EQ(r.status, 0) << r.out;
    auto reports = parse_csv(r.out);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(reports[0].spec.base_addr, 6u * (1u << 24));
    EXPECT_EQ(reports[0].footprint_bytes, (1u << 24) + 32u * reports[0].distinct_addresses);
}

TEST(CliBench, UsageErrors) {
    EXPECT_EQ(cli("bench --model symmetric --base 0 --range 0").status, 2);
    EXPECT_EQ(cli("bench --model symmetric --range 100").status, 2);
    EXPECT_EQ(cli("bench --model nonsense").status, 2);
    EXPECT_EQ(cli("bench --bogus-flag").status, 2);
    EXPECT_EQ(cli("bench --base lowish").status, 2);
    EXPECT_EQ(cli("bench --model symmetric --addr-bits 16 --base 65536 --range 16").status, 2);
    EXPECT_EQ(cli("").status, 2);
    EXPECT_EQ(cli("--help").status, 0);
}

TEST(CliSuite, CsvHasHeaderAndSixRows) {
    auto r = cli("suite --writes 300 --format csv --repeats 1 --warmup 0");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(lines(r.out), 7u);
    auto reports = parse_csv(r.out);
    ASSERT_EQ(reports.size(), 6u);
    const char* order[][2] = {{"symmetric", "low"},  {"symmetric", "high"}, {"asymmetric", "low"},
                              {"asymmetric", "high"}, {"attached", "low"},   {"attached", "high"}};
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(to_string(reports[i].spec.model), order[i][0]);
        EXPECT_EQ(reports[i].spec.label, order[i][1]);
    }
}

TEST(CliSuite, TableRowsInOrder) {
    auto r = cli("suite --writes 300 --repeats 1 --parallel");
    ASSERT_EQ(r.status, 0) << r.out;
    auto sym = r.out.find("symmetric   low");
    auto asym = r.out.find("asymmetric  high");
    auto att = r.out.find("attached    high");
    ASSERT_NE(sym, std::string::npos) << r.out;
    ASSERT_NE(asym, std::string::npos) << r.out;
    ASSERT_NE(att, std::string::npos) << r.out;
    EXPECT_LT(sym, asym);
    EXPECT_LT(asym, att);
}

TEST(CliLoad, AttachedScenario) {
    auto r = cli("load " + book("attached.book"));
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(r.out, "f -> p{impl}$c\n");
}

TEST(CliLoad, WithoutAttach) {
    auto r = cli("load " + book("unattached.book"));
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_EQ(r.out, "f -> p$c\n");
}

TEST(CliLoad, AttachAfterDefine) {
    auto r = cli("load " + book("attach_after_define.book"));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("StAlreadyDefined"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("attach_after_define.book:3"), std::string::npos) << r.out;
}

TEST(CliLoad, MissingFile) {
    EXPECT_EQ(cli("load /nonexistent/file.book").status, 1);
}

TEST(CliFuzz, FullRunPasses) {
    auto r = cli("fuzz --ops 100000 --seed 1");
    EXPECT_EQ(r.status, 0) << r.out;
}

TEST(CliFuzz, ZeroOps) {
    EXPECT_EQ(cli("fuzz --ops 0").status, 0);
}

TEST(CliFuzz, BrokenModelIsCaught) {
    auto r = cli("fuzz --ops 10000 --seed 3 --broken-model");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("divergence"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("model broken"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("reproduce: fuzz --ops"), std::string::npos) << r.out;
}
