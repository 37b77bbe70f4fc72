#include "fixtures.hpp"

#include "graphs3/cli.hpp"
#include "graphs3/trajectory_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace graphs3;
using fixtures::TempDir;

namespace {

struct CliResult {
    int code;
    std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string sample(const std::string& name) { return (fixtures::sample_dir() / name).string(); }

}  // namespace

TEST_CASE("stats") {
    const auto a = cli({"stats", "--graph", sample("graph.tsv")});
    CHECK(a.code == kExitOk);
    CHECK(a.out == "entity_count=15\nrelation_count=7\ntriple_count=16\nmax_degree=9\nduplicates=0\n");
    CHECK(cli({"stats", "--graph", sample("graph.tsv")}).out == a.out);

    TempDir dir("cli");
    fixtures::write_file(dir / "empty.tsv", "");
    CHECK(cli({"stats", "--graph", (dir / "empty.tsv").string()}).code == kExitIo);
    CHECK(cli({"stats", "--graph", (dir / "absent.tsv").string()}).code == kExitConfig);
    CHECK(cli({"stats"}).code == kExitConfig);
    CHECK(cli({"frobnicate"}).code == kExitConfig);
}

TEST_CASE("synthesize, refine, label on the sample fixture") {
    TempDir dir("cli");
    const std::string out = dir.path().string();
    const auto s = cli({"synthesize", "--graph", sample("graph.tsv"), "--questions", sample("questions.jsonl"),
                        "--policy", "oracle", "--script", sample("trajectory.jsonl"), "--out", out, "--run-id", "s"});
    REQUIRE(s.code == kExitOk);
    CHECK(read_jsonl(dir / "s/sft.jsonl").size() == 7);
    CHECK(read_jsonl(dir / "s/decisions.jsonl").size() == 7);
    CHECK(fixtures::read_file(dir / "s/config.txt").find("policy=\"oracle\"") != std::string::npos);

    const auto r = cli({"refine", "--graph", sample("graph.tsv"), "--questions", sample("questions.jsonl"),
                        "--trajectories", (dir / "s/trajectories.jsonl").string(), "--out", out, "--run-id", "r"});
    REQUIRE(r.code == kExitOk);
    const auto rl = read_jsonl(dir / "r/rl.jsonl");
    REQUIRE(rl.size() == 5);
    for (const auto& rec : rl) CHECK(rec["reward"] == 1.0);

    // the raw fixture refines the same way
    const auto rf = cli({"refine", "--graph", sample("graph.tsv"), "--trajectories", sample("trajectory.jsonl"),
                         "--out", out, "--run-id", "rf"});
    CHECK(rf.code == kExitOk);
    CHECK(fixtures::read_file(dir / "rf/refined.jsonl").find("\"kept_indices\":[0,2,4,5,6]") != std::string::npos);

    const auto l = cli({"label", "--graph", sample("graph.tsv"), "--refined", (dir / "r/refined.jsonl").string(),
                        "--decisions", (dir / "s/decisions.jsonl").string(), "--out", out, "--run-id", "l"});
    CHECK(l.code == kExitOk);
    CHECK(read_jsonl(dir / "l/labels.jsonl").size() == 7);
    const auto l2 = cli({"label", "--graph", sample("graph.tsv"), "--refined", (dir / "r/refined.jsonl").string(),
                         "--out", out, "--run-id", "l2"});
    CHECK(l2.code == kExitOk);
    CHECK(fixtures::read_file(dir / "l2/rl.jsonl") == fixtures::read_file(dir / "r/rl.jsonl"));
}

TEST_CASE("config file with command-line override") {
    TempDir dir("cli");
    fixtures::write_file(dir / "run.conf", "graph = " + sample("graph.tsv") + "\nquestions = " +
                                               sample("questions.jsonl") + "\npolicy = random\nseed = 4\nt-max = 3\n" +
                                               "out = " + dir.path().string() + "\n");
    const auto a = cli({"synthesize", "--config", (dir / "run.conf").string(), "--run-id", "a", "--t-max", "2"});
    CHECK((a.code == kExitOk || a.code == kExitEmpty));
    const std::string echoed = fixtures::read_file(dir / "a/config.txt");
    CHECK(echoed.find("t-max=2") != std::string::npos);
    CHECK(echoed.find("seed=4") != std::string::npos);
    CHECK(read_jsonl(dir / "a/decisions.jsonl").size() <= 2);
}

TEST_CASE("exit codes for bad configuration and empty results") {
    TempDir dir("cli");
    const std::string out = dir.path().string();
    const std::vector<std::string> base{"--graph", sample("graph.tsv"), "--questions", sample("questions.jsonl"),
                                        "--out", out};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = base;
        args.insert(args.begin(), extra.begin(), extra.end());
        return cli(args);
    };
    CHECK(with({"refine", "--trajectories", sample("trajectory.jsonl"), "--c1", "0.7", "--c2", "0.6"}).code ==
          kExitConfig);
    CHECK(with({"synthesize", "--policy", "remote"}).code == kExitConfig);
    CHECK(with({"synthesize", "--policy", "telepathy"}).code == kExitConfig);
    CHECK(with({"eval", "--retrievers", "khop9"}).code == kExitConfig);
    CHECK(with({"trace", "--question-id", "nope"}).code == kExitConfig);

    fixtures::write_file(dir / "none.jsonl", "");
    const auto empty = cli({"synthesize", "--graph", sample("graph.tsv"), "--questions", (dir / "none.jsonl").string(),
                            "--out", out, "--run-id", "empty"});
    CHECK(empty.code == kExitEmpty);
    CHECK(fixtures::read_file(dir / "empty/sft.jsonl").empty());

    // unreachable endpoint: every episode fails softly, nothing retained
    const auto down = with({"synthesize", "--policy", "remote", "--endpoint", "http://127.0.0.1:9/v1/chat/completions",
                            "--model", "m", "--max-retries", "0", "--timeout-ms", "200", "--t-max", "2", "--run-id",
                            "down"});
    CHECK(down.code == kExitEmpty);
}

TEST_CASE("trace prints each step and is reproducible") {
    TempDir dir("cli");
    const std::string out = dir.path().string();
    auto trace = [&](const std::string& id) {
        return cli({"trace", "--graph", sample("graph.tsv"), "--questions", sample("questions.jsonl"), "--policy",
                    "oracle", "--script", sample("trajectory.jsonl"), "--question-id", "oharu", "--out", out,
                    "--run-id", id});
    };
    const auto a = trace("a");
    REQUIRE(a.code == kExitOk);
    CHECK(a.out.find("=== step 6 ===") != std::string::npos);
    CHECK(a.out.find("answers ['Drama']") != std::string::npos);
    CHECK(a.out.find("terminal (finish)") != std::string::npos);
    const auto dumped = read_jsonl(dir / "a/trace.jsonl");
    const auto fixture = read_jsonl(fixtures::sample_dir() / "trajectory.jsonl");
    REQUIRE(dumped.size() == fixture.size());
    for (std::size_t i = 0; i < fixture.size(); ++i) CHECK(dumped[i]["extract_res"] == fixture[i]["extract_res"]);

    auto rtrace = [&](const std::string& id) {
        return cli({"trace", "--graph", sample("graph.tsv"), "--questions", sample("questions.jsonl"), "--policy",
                    "random", "--seed", "5", "--question-id", "oharu", "--out", out, "--run-id", id});
    };
    const auto r1 = rtrace("r1"), r2 = rtrace("r2");
    CHECK(fixtures::read_file(dir / "r1/trace.jsonl") == fixtures::read_file(dir / "r2/trace.jsonl"));
}
