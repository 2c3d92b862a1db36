#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "tdid/tdid.hpp"

namespace fs = std::filesystem;
using tdid::text::read_file;

namespace {

std::string sample(const std::string& name) { return std::string(TDID_SAMPLES_DIR) + "/" + name; }
std::string fixture(const std::string& name) { return std::string(TDID_FIXTURES_DIR) + "/" + name; }

fs::path workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "tdid_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::string& args, const std::string& env = "") {
    const auto out = workdir() / "stdout.txt";
    const auto err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && " + env + " '" + TDID_CLI + "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out.string()), read_file(err.string())};
}

bool has(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, Validate) {
    EXPECT_EQ(run("validate " + sample("two_rates.tdid")).code, 0);
    auto bad = run("validate " + fixture("cyclic.tdid"));
    EXPECT_EQ(bad.code, 1);
    EXPECT_TRUE(has(bad.err, "cycle")) << bad.err;
    auto sum = run("validate " + fixture("bad_rowsum.tdid"));
    EXPECT_EQ(sum.code, 1);
    EXPECT_EQ(sum.err, "cpt X @ *: row 1 sums to 0.9, not 1\n");
    EXPECT_EQ(run("validate " + (workdir() / "missing.tdid").string()).code, 2);
}

TEST(Cli, Deploy) {
    auto r = run("deploy " + sample("two_rates.tdid"));
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(has(r.out, "copy X@2 : lo hi ; of X@1\n"));
    auto parsed = tdid::parse_deployed(r.out);
    EXPECT_EQ(parsed, tdid::deploy(tdid::load_model(sample("two_rates.tdid"))));

    const auto out = (workdir() / "tr.deployed").string();
    EXPECT_EQ(run("deploy " + sample("two_rates.tdid") + " -o " + out + " --emit-dot").code, 0);
    EXPECT_EQ(read_file(out), r.out);
    EXPECT_TRUE(has(read_file((workdir() / "tr.dot").string()), "digraph"));

    EXPECT_EQ(run("deploy " + sample("one_decision.tdid") + " --emit-dot").code, 0);
    EXPECT_TRUE(fs::exists(workdir() / "out.dot"));

    auto single = run("deploy " + fixture("single_slice.tdid"));
    EXPECT_EQ(single.code, 0);
    EXPECT_TRUE(has(single.out, "master 1\n"));
    EXPECT_FALSE(has(single.out, "@2"));

    EXPECT_EQ(run("deploy " + fixture("cyclic.tdid")).code, 1);
}

TEST(Cli, Solve) {
    auto r = run("solve " + sample("one_decision.tdid"));
    EXPECT_EQ(r.code, 0);
    auto j = tdid::Json::parse(r.out);
    EXPECT_EQ(j["meu"].get<double>(), 7.0);
    EXPECT_EQ(j["decisions"][0]["node"], "D@1");
    EXPECT_EQ(j["decisions"][0]["table"][0]["option"], "a");

    EXPECT_EQ(run("solve --oracle " + sample("one_decision.tdid") + " " + fixture("two_decisions.tdid")).code, 0);
    auto many = tdid::Json::parse(run("solve " + sample("one_decision.tdid") + " " + fixture("single_slice.tdid")).out);
    ASSERT_EQ(many.size(), 2u);
    EXPECT_EQ(many[1]["meu"].get<double>(), 91.0);

    EXPECT_EQ(run("solve --oracle " + sample("cardiac.tdid"), "TDID_ORACLE_CAP=100").code, 4);
    EXPECT_EQ(run("solve --oracle " + sample("one_decision.tdid"), "TDID_ORACLE_CAP=lots").code, 1);
    EXPECT_EQ(run("solve " + fixture("cyclic.tdid")).code, 1);
}

TEST(Cli, Abstract) {
    // Canonical input comes back byte for byte.
    auto canon = run("abstract " + sample("cardiac.tdid"));
    EXPECT_EQ(canon.code, 0);
    const auto path = (workdir() / "canon.tdid").string();
    tdid::text::write_file(path, canon.out);
    EXPECT_EQ(run("abstract " + path).out, canon.out);

    auto drop = run("abstract " + sample("cardiac.tdid") + " --drop CD");
    EXPECT_EQ(drop.code, 0);
    auto m = tdid::parse_model(drop.out);
    EXPECT_FALSE(m.find("CD"));
    EXPECT_FALSE(m.find("poa"));
    EXPECT_FALSE(m.find("U_cd"));

    const auto coarse = (workdir() / "coarse.tdid").string();
    EXPECT_EQ(run("abstract " + sample("cardiac.tdid") + " --retime all=1,3 -o " + coarse).code, 0);
    auto deployed = run("deploy " + coarse);
    EXPECT_FALSE(has(deployed.out, "@2")) << deployed.out;

    auto dep = run("abstract " + sample("cardiac.tdid") + " --drop poa");
    EXPECT_EQ(dep.code, 1);
    EXPECT_TRUE(has(dep.err, "re-specify: cpt CD @ 1")) << dep.err;

    // Edits run in command-line order: retiming cr to 1,3 and then to 1,2 fails.
    EXPECT_EQ(run("abstract " + sample("cardiac.tdid") + " --retime cr=1,3 --retime cr=1,2").code, 1);
    EXPECT_EQ(run("abstract " + sample("cardiac.tdid") + " --retime cr=1,2 --retime cr=1").code, 0);
    EXPECT_EQ(run("abstract " + sample("cardiac.tdid") + " --retime cr").code, 1);
}

TEST(Cli, Select) {
    auto r = run("select " + sample("kb-worked") + " --urgency linear:1 --t0 1");
    EXPECT_EQ(r.code, 0) << r.err;
    auto j = tdid::Json::parse(r.out);
    EXPECT_EQ(j["t_star"].get<double>(), 4.0);
    EXPECT_EQ(j["model"], "m2");
    EXPECT_EQ(j["meu"].get<double>(), 9.0);
    EXPECT_EQ(j["curve"][1]["evc"].get<double>(), 1.0);
    EXPECT_EQ(j["curve"][1]["uc"].get<double>(), 5.0);
    EXPECT_TRUE(j.contains("policy"));

    auto fast = tdid::Json::parse(run("select " + sample("kb-worked") + " --urgency linear:10 --t0 1").out);
    EXPECT_EQ(fast["model"], "m1");
    EXPECT_EQ(fast["t_star"].get<double>(), 1.0);

    auto late = run("select " + sample("kb-worked") + " --urgency linear:1 --t0 1 --deadline 0.5");
    EXPECT_EQ(late.code, 1);
    EXPECT_TRUE(has(late.err, "infeasible deadline"));

    fs::create_directories(workdir() / "empty_kb");
    EXPECT_EQ(run("select " + (workdir() / "empty_kb").string() + " --urgency linear:1").code, 1);
    EXPECT_EQ(run("select " + sample("kb-worked") + " --t0 1").code, 1);
    EXPECT_EQ(run("select " + sample("kb-worked") + " --urgency cubic:1 --t0 1").code, 1);
}

TEST(Cli, Evc) {
    auto r = run("evc " + sample("kb-worked") + " --urgency linear:1 --t0 1");
    EXPECT_EQ(r.code, 0);
    auto j = tdid::Json::parse(r.out);
    EXPECT_FALSE(j.contains("policy"));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"t0", "curve", "t_star", "model", "meu"}));
}

TEST(Cli, Deterministic) {
    for (const std::string args : {"select " + sample("kb-cardiac") + " --alpha 0.1 --urgency linear:3",
                                   "solve " + sample("cardiac.tdid"), "deploy " + sample("cardiac.tdid")}) {
        auto a = run(args), b = run(args);
        EXPECT_EQ(a.code, 0) << args << "\n" << a.err;
        EXPECT_EQ(a.out, b.out) << args;
    }
}

TEST(Cli, BuildKb) {
    const auto dir = (workdir() / "kb").string();
    auto r = run("build-kb " + sample("cardiac.tdid") + " " + sample("cardiac.lattice") + " " + dir + " --prefix cardiac --tag cardiac");
    EXPECT_EQ(r.code, 0) << r.err;
    for (int k = 0; k < 4; ++k) {
        const std::string id = "cardiac-" + std::to_string(k);
        EXPECT_EQ(read_file(dir + "/" + id + ".manifest"), read_file(sample("kb-cardiac/" + id + ".manifest")));
        EXPECT_EQ(read_file(dir + "/" + id + ".tdid"), read_file(sample("kb-cardiac/" + id + ".tdid")));
    }
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}
