// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ani/cli.hpp"

using namespace ani;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "ani");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json json_of(const Result& r) { return nlohmann::json::parse(r.out); }

std::string sample(const std::string& name) { return std::string(ANI_SAMPLES_DIR) + "/" + name; }

fs::path temp_file(const std::string& name, const std::string& text) {
    auto path = fs::temp_directory_path() / ("ani_test_" + name);
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST(Cli, ExitCodesFollowTheVerdict) {
    EXPECT_EQ(run({"check", "--fixture", "running", "--check", "ni"}).code, 0);
    EXPECT_EQ(run({"check", "--fixture", "running", "--check", "trace-ni"}).code, 1);
    EXPECT_EQ(run({"check", "--fixture", "copy"}).code, 1);
    EXPECT_EQ(run({"check", "--fixture", "definite", "--check", "dani"}).code, 0);
    auto loop = temp_file("loop.ani", "var h : internal in [0..1]; var l : observable in [0..0];\n"
                                      "begin while h < 1 do { skip }; l := 0 end");
    EXPECT_EQ(run({"check", "--program", loop.string(), "--budget", "50"}).code, 2);
}

TEST(Cli, UsageErrorsExitThree) {
    auto bad = temp_file("bad.ani", "var l : observable;\nbegin l := ; end");
    auto r = run({"check", "--program", bad.string()});
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("parse error at 2:"), std::string::npos) << r.err;
    EXPECT_EQ(run({"check", "--fixture", "nosuch"}).code, 3);
    EXPECT_EQ(run({"check", "--fixture", "running", "--check", "fancy"}).code, 3);
    EXPECT_EQ(run({"check", "--program", "/nonexistent/x.ani"}).code, 3);
    EXPECT_EQ(run({"check"}).code, 3);
    EXPECT_EQ(run({}).code, 3);
    EXPECT_EQ(run({"check", "--fixture", "running", "--policy", "rho = l1: fancy;"}).code, 3);
    EXPECT_EQ(run({"check", "--fixture", "running", "--range", "3..1"}).code, 3);
    EXPECT_EQ(run({"check", "--fixture", "running", "--policy", "rho = l1: partition {1,2; 2};"}).code, 3);
}

TEST(Cli, JsonReportHasTheDocumentedKeys) {
    auto r = run({"check", "--fixture", "running", "--check", "trace-ni", "--format", "json"});
    ASSERT_EQ(r.code, 1);
    auto j = json_of(r);
    for (const char* k : {"version", "program", "check", "status", "witnesses", "derived", "pairs_checked", "elapsed_ms"})
        EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["status"], "violated");
    EXPECT_EQ(j["check"], "trace-ni");
    ASSERT_FALSE(j["witnesses"].empty());
    EXPECT_EQ(j["witnesses"][0]["point"], "3");
    EXPECT_NE(j["witnesses"][0]["obs1"], j["witnesses"][0]["obs2"]);
}

TEST(Cli, NoTimingMakesOutputDeterministic) {
    std::vector<std::string> args{"check", "--fixture", "release", "--check", "trace-ni", "--format", "json", "--no-timing"};
    auto a = run(args);
    auto b = run(args);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(json_of(a)["elapsed_ms"], 0);
    auto t1 = run({"derive", "release-at", "--fixture", "declassified", "--no-timing"});
    auto t2 = run({"derive", "release-at", "--fixture", "declassified", "--no-timing"});
    EXPECT_EQ(t1.out, t2.out);
}

TEST(Cli, OutWritesTheReportAndPrintsTheStatus) {
    auto path = fs::temp_directory_path() / "ani_test_report.json";
    auto r = run({"check", "--fixture", "copy", "--format", "json", "--out", path.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(r.out, "violated\n");
    std::ifstream in(path);
    auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["status"], "violated");
}

TEST(Cli, DeriveCommands) {
    auto obs = run({"derive", "observer", "--fixture", "parity-leak", "--format", "json"});
    EXPECT_EQ(obs.code, 0);
    ASSERT_EQ(json_of(obs)["derived"].size(), 1u);

    auto rel = run({"derive", "release", "--fixture", "release", "--format", "json"});
    EXPECT_EQ(rel.code, 0);
    auto d = json_of(rel)["derived"][0];
    EXPECT_EQ(d["variables"], nlohmann::json::array({"h2"}));
    EXPECT_EQ(d["atoms"].size(), 2u);

    auto inc = run({"derive", "release-at", "--fixture", "declassified", "--format", "json"});
    EXPECT_EQ(inc.code, 0);
    auto loc = run({"derive", "release-at", "--fixture", "declassified", "--mode", "localized", "--format", "json"});
    EXPECT_EQ(loc.code, 1);
    for (const auto& e : json_of(loc)["derived"])
        if (e["point"] == "3") EXPECT_TRUE(e["policy_satisfied"].get<bool>());
        else EXPECT_FALSE(e["policy_satisfied"].get<bool>());
}

TEST(Cli, SelftestExitCodes) {
    auto q = run({"selftest", "--quick"});
    EXPECT_EQ(q.code, 0) << q.out;
    EXPECT_NE(q.out.find("KNOWN"), std::string::npos);
    auto lit = run({"selftest", "--secr-literal"});
    EXPECT_EQ(lit.code, 1);
    EXPECT_NE(lit.out.find("FAIL"), std::string::npos);
}

TEST(Cli, VerifyCompleteness) {
    auto r = run({"verify-completeness", "--fixture", "definite", "--format", "json"});
    EXPECT_EQ(r.code, 0);
    auto j = json_of(r);
    EXPECT_EQ(j["status"], "agree");
    EXPECT_GE(j["equations"].size(), 5u);
    auto rnd = run({"verify-completeness", "--random", "20", "--seed", "3"});
    EXPECT_EQ(rnd.code, 0);
    EXPECT_NE(rnd.out.find("20/20 agreements"), std::string::npos) << rnd.out;
    EXPECT_EQ(run({"verify-completeness", "--fixture", "definite", "--check", "bogus"}).code, 3);
}

TEST(Cli, SamplesParseAndMatchFixtures) {
    std::size_t programs = 0;
    for (const auto& e : fs::directory_iterator(ANI_SAMPLES_DIR)) {
        if (e.path().extension() != ".ani") continue;
        ++programs;
        auto r = run({"check", "--program", e.path().string(), "--no-timing"});
        EXPECT_NE(r.code, 3) << e.path() << ": " << r.err;
        auto name = e.path().stem().string();
        std::replace(name.begin(), name.end(), '_', '-');
        try {
            const auto& fx = fixtures::by_name(name);
            auto from_file = lang::parse_program(cli::read_file(e.path().string()), fx.name);
            EXPECT_EQ(from_file, lang::parse_program(fx.program, fx.name)) << name;
        } catch (const std::out_of_range&) {
        }
    }
    EXPECT_GE(programs, 9u);
    for (auto [prog, pol] : std::vector<std::pair<std::string, std::string>>{
             {"running.ani", "running_nonneg.policy"},
             {"declassified.ani", "declassified_localized.policy"},
             {"parity_leak.ani", "parity_leak.policy"},
             {"sign_flip.ani", "sign_flip.policy"}}) {
        auto r = run({"check", "--program", sample(prog), "--policy", sample(pol), "--check", "trace-ani"});
        EXPECT_NE(r.code, 3) << pol << ": " << r.err;
    }
}

TEST(Cli, PolicyFromFileEqualsInlineText) {
    auto a = run({"check", "--program", sample("running.ani"), "--policy", sample("running.policy"), "--check",
                  "trace-ni", "--format", "json", "--no-timing"});
    auto b = run({"check", "--program", sample("running.ani"), "--policy", "O={3,4,end}", "--check", "trace-ni",
                  "--format", "json", "--no-timing"});
    auto ja = json_of(a), jb = json_of(b);
    EXPECT_EQ(ja["witnesses"], jb["witnesses"]);
    EXPECT_EQ(ja["status"], jb["status"]);
}
