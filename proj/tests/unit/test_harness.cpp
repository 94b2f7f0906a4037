#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "structfilt/error.hpp"
#include "structfilt/harness.hpp"

using namespace structfilt;
namespace fs = std::filesystem;

namespace
{
    fs::path scratch_dir(const std::string& name)
    {
        const fs::path dir = fs::temp_directory_path() / ("structfilt_test_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        return dir;
    }

    std::string slurp(const fs::path& path)
    {
        std::ifstream in(path);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }

    int run_cli(const std::string& args)
    {
        const std::string cmd = std::string(STRUCTFILT_CLI) + " run " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    ExperimentConfig small_sine()
    {
        ExperimentConfig c;
        c.name = "small";
        c.values = {4, 8};
        c.degree = 2;
        c.dt = 0.01;
        c.tfinal = 0.1;
        return c;
    }
} // namespace

TEST_CASE("config sections inherit defaults")
{
    std::istringstream in(R"(# shared
problem = advection-hat
degree = 4   # trailing comment
tfinal = 0.5

[coarse]
values = 4, 8
filter = PF

[fine]
values = 16 32
dt = 1e-3
)");
    const auto configs = parse_config(in);
    REQUIRE(configs.size() == 2);
    CHECK(configs[0].name == "coarse");
    CHECK(configs[0].problem == "advection-hat");
    CHECK(configs[0].degree == 4);
    CHECK(configs[0].values == std::vector<std::size_t>{4, 8});
    CHECK(configs[0].filter == FilterVariant::PositivityFlux);
    CHECK(!configs[0].dt);
    CHECK(configs[1].values == std::vector<std::size_t>{16, 32});
    CHECK(*configs[1].dt == 1e-3);
    CHECK(configs[1].tfinal == 0.5);
    CHECK(configs[1].filter == FilterVariant::Off);

    std::istringstream flat("sweep = p\nvalues = 2,3\n");
    const auto single = parse_config(flat);
    REQUIRE(single.size() == 1);
    CHECK(single[0].name == "experiment");
    CHECK(single[0].sweep == SweepKind::P);
}

TEST_CASE("config errors")
{
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in);
    };
    CHECK_THROWS_AS(parse("colour = blue\n"), ConfigError);
    CHECK_THROWS_AS(parse("degree = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse("dt = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse("just words\n"), ConfigError);
    CHECK_THROWS_AS(parse("[open\n"), ConfigError);
    CHECK_THROWS_AS(parse("filter = PIF\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/structfilt.ini"), ConfigError);

    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.values = {8, 4};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.dt = 0.3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.problem = "cg-diffusion-reaction";
    c.filter = FilterVariant::PositivityFluxMass;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.degree = 1;
    c.filter = FilterVariant::PositivityFluxMass;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.problem = "burgers";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("default time steps")
{
    ExperimentConfig c;
    const double dt = resolve_dt(c, 16, 3);
    CHECK(dt <= 0.1 * (2.0 / 16.0) / 7.0);
    CHECK(std::abs(c.tfinal / dt - std::round(c.tfinal / dt)) < 1e-9);
    c.problem = "cg-diffusion-reaction";
    CHECK(resolve_dt(c, 16, 3) == 1e-4);
    c.dt = 0.05;
    CHECK(resolve_dt(c, 16, 3) == 0.05);
}

TEST_CASE("report_timing")
{
    std::vector<StepReport> steps(4);
    for (std::size_t k = 0; k < steps.size(); ++k)
    {
        steps[k].step = k + 1;
        steps[k].filtered_elements = k;
        steps[k].filter_iterations = 2 * k;
        steps[k].filter_time = 1.0;
        steps[k].solver_time = 3.0;
    }
    const TimingSummary t = report_timing(steps);
    CHECK(t.steps == 4);
    CHECK(t.filter_fraction == doctest::Approx(0.25));
    CHECK(t.avg_flagged == doctest::Approx(1.5));
    CHECK(t.iterations_total == 12);
    CHECK(report_timing({}).filter_fraction == 0.0);
}

TEST_CASE("sweep rows, orders and csv layout")
{
    ExperimentConfig c = small_sine();
    c.deterministic = true;
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.all_ok());
    CHECK(std::isnan(r.rows[0].observed_order));
    CHECK(r.rows[1].observed_order ==
          doctest::Approx(std::log(r.rows[0].l2_error / r.rows[1].l2_error) / std::log(2.0)));
    CHECK(r.rows[0].dof == 12);
    CHECK(r.rows[1].filter_time_fraction == 0.0);

    std::ostringstream csv;
    write_csv(csv, r);
    std::istringstream lines(csv.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header == "sweep_value,dof,l2_error,observed_order,avg_flagged,filter_time_fraction,iterations_total");

    std::ostringstream again;
    write_csv(again, run_experiment(c));
    CHECK(again.str() == csv.str());

    std::ostringstream js;
    write_json(js, r);
    const auto doc = nlohmann::json::parse(js.str());
    CHECK(doc["rows"].size() == 2);
    CHECK(doc["rows"][0]["observed_order"].is_null());
    CHECK(doc["config"]["filter"] == "off");
}

TEST_CASE("failed rows are recorded, not thrown")
{
    ExperimentConfig c;
    c.name = "diverging";
    c.problem = "cg-diffusion-reaction";
    c.values = {4};
    c.degree = 2;
    c.dt = 0.1;
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(!r.all_ok());
    CHECK(!r.rows[0].error.empty());
    std::ostringstream csv;
    write_csv(csv, r);
    CHECK(csv.str().find("4,9,error,error,error,error,error") != std::string::npos);
}

TEST_CASE("artifacts")
{
    const fs::path dir = scratch_dir("artifacts");
    ExperimentConfig c = small_sine();
    c.out_dir = (dir / "nested").string();
    write_artifacts(run_experiment(c));
    CHECK(fs::exists(dir / "nested" / "small.csv"));
    CHECK(fs::exists(dir / "nested" / "small.json"));
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes")
{
    const fs::path dir = scratch_dir("cli");
    const std::string out = " --out " + (dir / "out").string();
    const std::string quick = " --values 4 8 --degree 2 --dt 0.01 --tfinal 0.1";
    CHECK(run_cli(quick + out) == 0);
    CHECK(run_cli(quick + " --filter PFI --deterministic" + out) == 0);
    CHECK(run_cli(quick + " --filter bogus" + out) == 1);
    CHECK(run_cli(quick + " --config " + (dir / "missing.ini").string() + out) == 1);
    CHECK(run_cli("--problem cg-diffusion-reaction --filter PF" + quick + out) == 1);
    CHECK(run_cli("--problem cg-diffusion-reaction --values 4 --degree 2 --dt 0.1 --tfinal 1" + out) == 2);

    // deterministic runs are byte-identical
    std::ofstream(dir / "run.ini") << "values = 4, 8\ndegree = 3\ndt = 0.01\ntfinal = 0.2\nfilter = P\n"
                                      "problem = advection-hat\n[hat]\n";
    CHECK(run_cli("--config " + (dir / "run.ini").string() + " --deterministic --out " + (dir / "a").string()) == 0);
    CHECK(run_cli("--config " + (dir / "run.ini").string() + " --deterministic --out " + (dir / "b").string()) == 0);
    CHECK(slurp(dir / "a" / "hat.csv") == slurp(dir / "b" / "hat.csv"));
    CHECK(slurp(dir / "a" / "hat.json") == slurp(dir / "b" / "hat.json"));
    CHECK(!slurp(dir / "a" / "hat.csv").empty());
    fs::remove_all(dir);
}
