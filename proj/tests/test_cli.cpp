#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "ssae/checkpoint.hpp"
#include "ssae/config.hpp"
#include "ssae/eval.hpp"

using namespace ssae;
using namespace testutil;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(SSAE_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void write_config(const std::filesystem::path& path) {
    RunConfig cfg;
    cfg.hyper = tiny_hyper();
    cfg.hyper.seasonal_features = {"precip"};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 32;
    cfg.split.test_days = 60;
    write_json(to_json(cfg), path);
}

}  // namespace

TEST_CASE("cli synth is deterministic") {
    TempDir dir("cli_synth");
    CHECK(run("synth --days 300 --period 100 --seed 4 --out " + q(dir / "a.csv")).code == 0);
    CHECK(run("synth --days 300 --period 100 --seed 4 --out " + q(dir / "b.csv")).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(load_csv(dir / "a.csv").rows() == 300);
}

TEST_CASE("cli train twice with the same seed gives identical checkpoints; evaluate and forecast") {
    TempDir dir("cli_train");
    REQUIRE(run("synth --days 400 --period 120 --out " + q(dir / "d.csv")).code == 0);
    write_config(dir / "cfg.json");
    const auto t1 = run("train --data " + q(dir / "d.csv") + " --config " + q(dir / "cfg.json") + " --seed 7 --out " +
                        q(dir / "m1.json"));
    REQUIRE(t1.code == 0);
    CHECK(t1.out.find("epoch   2") != std::string::npos);
    REQUIRE(run("train --data " + q(dir / "d.csv") + " --config " + q(dir / "cfg.json") + " --seed 7 --out " +
                q(dir / "m2.json"))
                .code == 0);
    CHECK(slurp(dir / "m1.json") == slurp(dir / "m2.json"));
    CHECK(slurp(dir / "m1.history.json") == slurp(dir / "m2.history.json"));
    const auto ckpt_json = read_json(dir / "m1.json");
    CHECK(ckpt_json["seed"] == 7);
    const auto ckpt = checkpoint_from_json(ckpt_json);
    CHECK(checkpoint_scalar_count(ckpt_json) == ssae_count_parameters(ckpt.model));

    const auto ev = run("evaluate --model " + q(dir / "m1.json") + " --data " + q(dir / "d.csv") + " --report " +
                        q(dir / "r.json"));
    REQUIRE(ev.code == 0);
    const auto report = metric_report_from_json(read_json(dir / "r.json"));
    CHECK(report.horizons.size() == 2);
    CHECK(report.n_test == 60 - 2 + 1);

    const auto agg = run("evaluate --aggregate " + q(dir / "r.json") + " " + q(dir / "r.json"));
    REQUIRE(agg.code == 0);
    CHECK(json::parse(agg.out)["runs"] == 2);

    const auto csv = run("forecast --model " + q(dir / "m1.json") + " --data " + q(dir / "d.csv"));
    const auto js = run("forecast --model " + q(dir / "m1.json") + " --data " + q(dir / "d.csv") + " --format json");
    REQUIRE(csv.code == 0);
    REQUIRE(js.code == 0);
    const auto table = load_csv(dir / "d.csv");
    const auto rows = json::parse(js.out)["forecast"];
    REQUIRE(rows.size() == 2);
    std::istringstream lines(csv.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "date,precip_mm");
    for (std::size_t k = 0; k < 2; ++k) {
        std::getline(lines, line);
        const auto date = (table.dates.back() + static_cast<std::int64_t>(k + 1)).iso();
        CHECK(rows[k]["date"] == date);
        CHECK(line.substr(0, 10) == date);
        CHECK(std::stod(line.substr(11)) == rows[k]["precip_mm"].get<double>());
    }

    const auto unc = run("uncertainty --model " + q(dir / "m1.json") + " --data " + q(dir / "d.csv") +
                         " --runs 5 --levels 0.5,0.9 --csv " + q(dir / "b.csv") + " --report " + q(dir / "u.json"));
    CHECK(unc.code == 0);
    CHECK(slurp(dir / "b.csv").starts_with("anchor,date,step,actual,mean,median,lower_50,upper_50,lower_90,upper_90"));
}

TEST_CASE("cli forecast from a zero model is zero mm, clamped or not") {
    TempDir dir("cli_zero");
    const auto table = make_table(30, 2, 1);
    write_csv(table, dir / "d.csv");
    auto scaler = fit_scaler(table);
    scaler.mins.back() = 0.0;
    save_checkpoint(Checkpoint{make_model(tiny_hyper(), scaler), 0, {}}, dir / "z.json");
    for (const char* flag : {"", " --clamp-nonneg"}) {
        const auto r = run("forecast --model " + q(dir / "z.json") + " --data " + q(dir / "d.csv") + " --format json" + flag);
        REQUIRE(r.code == 0);
        for (const auto& row : json::parse(r.out)["forecast"]) CHECK(row["precip_mm"].get<double>() == 0.0);
    }
}

TEST_CASE("cli exit codes") {
    TempDir dir("cli_codes");
    write_config(dir / "cfg.json");
    CHECK(run("").code == 1);
    CHECK(run("train --config " + q(dir / "cfg.json")).code == 1);  // missing --out
    CHECK(run("frobnicate").code == 1);
    CHECK(run("train --data /nonexistent.csv --config " + q(dir / "cfg.json") + " --out " + q(dir / "m.json")).code == 2);

    const auto table = make_table(30, 2, 1);
    write_csv(table, dir / "d.csv");
    write_csv(table.slice(0, 5), dir / "short.csv");
    save_checkpoint(Checkpoint{make_model(tiny_hyper(), fit_scaler(table)), 0, {}}, dir / "z.json");
    CHECK(run("forecast --model " + q(dir / "z.json") + " --data " + q(dir / "short.csv")).code == 2);

    auto other = table;
    other.feature_names[1] = "zz";
    write_csv(other, dir / "other.csv");
    CHECK(run("evaluate --model " + q(dir / "z.json") + " --data " + q(dir / "other.csv") + " --test-start " +
              table.dates[20].iso())
              .code == 2);

    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK(run("train --data " + q(dir / "d.csv") + " --config " + q(dir / "bad.json") + " --out " + q(dir / "m.json")).code == 2);
}

TEST_CASE("cli gradcheck passes and params agrees with the checkpoint") {
    const auto g = run("gradcheck --seed 1");
    CHECK(g.code == 0);
    CHECK(g.out.find("gradcheck passed") != std::string::npos);
    CHECK(run("gradcheck --seed 1 --tol 1e-30").code == 3);

    TempDir dir("cli_params");
    const auto table = make_table(30, 2, 1);
    save_checkpoint(Checkpoint{make_model(tiny_hyper(), fit_scaler(table)), 0, {}}, dir / "z.json");
    const auto p = run("params --model " + q(dir / "z.json"));
    REQUIRE(p.code == 0);
    const auto count = ssae_count_parameters(make_model(tiny_hyper(), fit_scaler(table)));
    CHECK(p.out.find("parameters " + std::to_string(count)) != std::string::npos);
    CHECK(p.out.find("checkpoint scalars " + std::to_string(count)) != std::string::npos);
}
