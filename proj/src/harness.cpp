#include "structfilt/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "structfilt/error.hpp"

namespace structfilt
{
    namespace
    {
        std::string trim(const std::string& s)
        {
            const auto first = s.find_first_not_of(" \t\r\n");
            if (first == std::string::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r\n");
            return s.substr(first, last - first + 1);
        }

        double parse_real(const std::string& key, const std::string& value)
        {
            try
            {
                std::size_t used = 0;
                const double x = std::stod(value, &used);
                if (used != value.size() || !std::isfinite(x))
                    throw std::invalid_argument(value);
                return x;
            }
            catch (const std::exception&)
            {
                throw ConfigError("'" + key + "': expected a number, got '" + value + "'");
            }
        }

        std::uint64_t parse_unsigned(const std::string& key, const std::string& value)
        {
            if (value.empty() || !std::all_of(value.begin(), value.end(), [](unsigned char ch) { return std::isdigit(ch); }))
                throw ConfigError("'" + key + "': expected a nonnegative integer, got '" + value + "'");
            try
            {
                return std::stoull(value);
            }
            catch (const std::exception&)
            {
                throw ConfigError("'" + key + "': integer out of range: '" + value + "'");
            }
        }

        bool parse_bool(const std::string& key, const std::string& value)
        {
            if (value == "true" || value == "1" || value == "yes" || value == "on")
                return true;
            if (value == "false" || value == "0" || value == "no" || value == "off")
                return false;
            throw ConfigError("'" + key + "': expected true or false, got '" + value + "'");
        }

        std::vector<std::size_t> parse_values(const std::string& key, const std::string& value)
        {
            std::string spaced = value;
            std::replace(spaced.begin(), spaced.end(), ',', ' ');
            std::istringstream in(spaced);
            std::vector<std::size_t> out;
            std::string token;
            while (in >> token)
                out.push_back(static_cast<std::size_t>(parse_unsigned(key, token)));
            if (out.empty())
                throw ConfigError("'" + key + "': empty list");
            return out;
        }

        std::string number(double x)
        {
            if (std::isnan(x))
                return "nan";
            std::ostringstream out;
            out << std::setprecision(12) << std::scientific << x;
            return out.str();
        }

        double nan() { return std::numeric_limits<double>::quiet_NaN(); }
    } // namespace

    void ExperimentConfig::set(const std::string& key, const std::string& raw)
    {
        const std::string value = trim(raw);
        if (key == "problem")
            problem = value;
        else if (key == "sweep")
        {
            if (value == "h")
                sweep = SweepKind::H;
            else if (value == "p")
                sweep = SweepKind::P;
            else
                throw ConfigError("'sweep': expected h or p, got '" + value + "'");
        }
        else if (key == "values")
            values = parse_values(key, value);
        else if (key == "degree")
            degree = static_cast<std::size_t>(parse_unsigned(key, value));
        else if (key == "elements")
            elements = static_cast<std::size_t>(parse_unsigned(key, value));
        else if (key == "dt")
            dt = parse_real(key, value);
        else if (key == "tfinal")
            tfinal = parse_real(key, value);
        else if (key == "filter")
            filter = parse_filter_variant(value);
        else if (key == "tol")
            tolerance = parse_real(key, value);
        else if (key == "out")
            out_dir = value;
        else if (key == "seed")
            seed = parse_unsigned(key, value);
        else if (key == "deterministic")
            deterministic = parse_bool(key, value);
        else if (key == "eps")
            eps = parse_real(key, value);
        else if (key == "c")
            c = parse_real(key, value);
        else if (key == "gamma")
            gamma = parse_real(key, value);
        else if (key == "mu")
            mu = parse_real(key, value);
        else if (key == "name")
            name = value;
        else
            throw ConfigError("unknown key '" + key + "'");
    }

    void ExperimentConfig::validate() const
    {
        const std::string where = "[" + name + "] ";
        if (name.empty() || name.find_first_of("/\\") != std::string::npos)
            throw ConfigError(where + "experiment name must be nonempty and contain no path separators");
        if (problem != "advection-sine" && problem != "advection-hat" && problem != "cg-diffusion-reaction")
            throw ConfigError(where + "unknown problem '" + problem + "'");
        if (values.empty())
            throw ConfigError(where + "sweep values are empty");
        for (std::size_t i = 1; i < values.size(); ++i)
        {
            if (values[i] <= values[i - 1])
                throw ConfigError(where + "sweep values must be strictly increasing");
        }
        if (!is_dg() && (filter == FilterVariant::PositivityFlux || filter == FilterVariant::PositivityFluxMass))
            throw ConfigError(where + "filter variants PF and PFI apply to DG problems only");

        const std::size_t min_elements = sweep == SweepKind::H ? values.front() : elements;
        if (min_elements < 1)
            throw ConfigError(where + "element count must be at least 1");
        const std::size_t min_degree = sweep == SweepKind::P ? values.front() : degree;
        if (!is_dg() && min_degree < 1)
            throw ConfigError(where + "CG degree must be at least 1");
        if (filter == FilterVariant::PositivityFlux && min_degree < 1)
            throw ConfigError(where + "PF needs degree >= 1 (two boundary values)");
        if (filter == FilterVariant::PositivityFluxMass && min_degree < 2)
            throw ConfigError(where + "PFI needs degree >= 2 (boundary values and mass)");

        if (!(tfinal > 0.0))
            throw ConfigError(where + "tfinal must be positive");
        if (dt)
        {
            if (!(*dt > 0.0))
                throw ConfigError(where + "dt must be positive");
            try
            {
                step_count(*dt, tfinal);
            }
            catch (const std::invalid_argument&)
            {
                throw ConfigError(where + "dt must divide tfinal");
            }
        }
        if (!(tolerance > 0.0))
            throw ConfigError(where + "tol must be positive");
        if (!(gamma >= 0.0))
            throw ConfigError(where + "gamma must be nonnegative");
        if (out_dir.empty())
            throw ConfigError(where + "out must be nonempty");
    }

    std::vector<ExperimentConfig> parse_config(std::istream& in)
    {
        std::vector<std::pair<std::string, std::string>> defaults;
        std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[')
            {
                if (line.back() != ']')
                    throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
                sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            auto entry = std::make_pair(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
            if (sections.empty())
                defaults.push_back(std::move(entry));
            else
                sections.back().second.push_back(std::move(entry));
        }

        std::vector<ExperimentConfig> out;
        if (sections.empty())
            sections.push_back({"experiment", {}});
        for (const auto& [name, entries] : sections)
        {
            ExperimentConfig config;
            config.name = name;
            for (const auto& [key, value] : defaults)
                config.set(key, value);
            for (const auto& [key, value] : entries)
                config.set(key, value);
            out.push_back(std::move(config));
        }
        return out;
    }

    std::vector<ExperimentConfig> load_config(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        return parse_config(in);
    }

    TimingSummary report_timing(const std::vector<StepReport>& reports)
    {
        TimingSummary summary;
        summary.steps = reports.size();
        std::size_t flagged = 0;
        for (const auto& r : reports)
        {
            summary.filter_time += r.filter_time;
            summary.solver_time += r.solver_time;
            summary.iterations_total += r.filter_iterations;
            flagged += r.filtered_elements;
        }
        const double total = summary.filter_time + summary.solver_time;
        summary.filter_fraction = total > 0.0 ? summary.filter_time / total : 0.0;
        summary.avg_flagged = reports.empty() ? 0.0 : static_cast<double>(flagged) / static_cast<double>(reports.size());
        return summary;
    }

    bool ExperimentResult::all_ok() const
    {
        return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.ok; });
    }

    double resolve_dt(const ExperimentConfig& config, std::size_t elements, std::size_t degree)
    {
        if (config.dt)
            return *config.dt;
        if (!config.is_dg())
            return 1e-4;
        const double h = 2.0 / static_cast<double>(elements);
        const double limit = 0.1 * h / (2.0 * static_cast<double>(degree) + 1.0);
        const double steps = std::ceil(config.tfinal / limit);
        return config.tfinal / steps;
    }

    ExperimentResult run_experiment(const ExperimentConfig& config)
    {
        config.validate();
        ExperimentResult result{config, {}};

        RunOptions options;
        options.variant = config.filter;
        options.filter.tolerance = config.tolerance;

        for (std::size_t i = 0; i < config.values.size(); ++i)
        {
            const std::size_t value = config.values[i];
            const std::size_t E = config.sweep == SweepKind::H ? value : config.elements;
            const std::size_t p = config.sweep == SweepKind::P ? value : config.degree;
            ConvergenceRow row;
            row.sweep_value = value;
            row.dof = config.is_dg() ? E * (p + 1) : E * p + 1;
            row.dt = resolve_dt(config, E, p);
            row.observed_order = nan();
            try
            {
                const Mesh1D mesh = Mesh1D::uniform(-1.0, 1.0, E);
                std::vector<StepReport> steps;
                if (config.is_dg())
                {
                    const AdvectionProblem problem =
                        config.problem == "advection-hat" ? advection_hat() : advection_sine();
                    auto run = run_simulation(problem, mesh, p, row.dt, config.tfinal, options);
                    row.l2_error = l2_error(run.field, problem.at(config.tfinal));
                    row.clamped_elements = run.clamped_elements;
                    row.relaxed_elements = run.relaxed_elements;
                    steps = std::move(run.steps);
                }
                else
                {
                    const DiffusionReactionProblem problem =
                        manufactured_tanh(config.eps, config.c, config.gamma, config.mu);
                    auto run = run_simulation(problem, mesh, p, row.dt, config.tfinal, options);
                    row.l2_error = l2_error(run.field, problem.at(config.tfinal));
                    steps = std::move(run.steps);
                }
                if (!std::isfinite(row.l2_error))
                    throw Error("solution is not finite at t = " + number(config.tfinal));
                const TimingSummary timing = report_timing(steps);
                row.avg_flagged = timing.avg_flagged;
                row.iterations_total = timing.iterations_total;
                row.filter_time_fraction = config.deterministic ? 0.0 : timing.filter_fraction;
            }
            catch (const std::exception& err)
            {
                row.ok = false;
                row.error = err.what();
                row.l2_error = nan();
            }
            if (row.ok && i > 0 && result.rows.back().ok)
            {
                const ConvergenceRow& prev = result.rows.back();
                row.observed_order = std::log(prev.l2_error / row.l2_error) /
                                     std::log(static_cast<double>(value) / static_cast<double>(prev.sweep_value));
            }
            result.rows.push_back(std::move(row));
        }
        return result;
    }

    void write_csv(std::ostream& out, const ExperimentResult& result)
    {
        out << "sweep_value,dof,l2_error,observed_order,avg_flagged,filter_time_fraction,iterations_total\n";
        for (const auto& row : result.rows)
        {
            out << row.sweep_value << ',' << row.dof << ',';
            if (!row.ok)
            {
                out << "error,error,error,error,error\n";
                continue;
            }
            out << number(row.l2_error) << ',' << number(row.observed_order) << ',' << number(row.avg_flagged) << ','
                << number(row.filter_time_fraction) << ',' << row.iterations_total << '\n';
        }
    }

    void write_json(std::ostream& out, const ExperimentResult& result)
    {
        using nlohmann::json;
        const ExperimentConfig& c = result.config;
        auto real_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };

        json doc;
        doc["name"] = c.name;
        doc["config"] = {
            {"problem", c.problem},
            {"sweep", c.sweep == SweepKind::H ? "h" : "p"},
            {"values", c.values},
            {"degree", c.degree},
            {"elements", c.elements},
            {"dt", c.dt ? json(*c.dt) : json(nullptr)},
            {"tfinal", c.tfinal},
            {"filter", to_string(c.filter)},
            {"tol", c.tolerance},
            {"seed", c.seed},
            {"deterministic", c.deterministic},
        };
        if (!c.is_dg())
            doc["config"]["manufactured"] = {{"eps", c.eps}, {"c", c.c}, {"gamma", c.gamma}, {"mu", c.mu}};

        json rows = json::array();
        for (const auto& r : result.rows)
        {
            json row = {
                {"sweep_value", r.sweep_value},
                {"dof", r.dof},
                {"dt", r.dt},
                {"ok", r.ok},
            };
            if (r.ok)
            {
                row["l2_error"] = real_or_null(r.l2_error);
                row["observed_order"] = real_or_null(r.observed_order);
                row["avg_flagged"] = r.avg_flagged;
                row["filter_time_fraction"] = r.filter_time_fraction;
                row["iterations_total"] = r.iterations_total;
                row["clamped_elements"] = r.clamped_elements;
                row["relaxed_elements"] = r.relaxed_elements;
            }
            else
            {
                row["error"] = r.error;
            }
            rows.push_back(std::move(row));
        }
        doc["rows"] = std::move(rows);
        doc["all_ok"] = result.all_ok();
        out << doc.dump(2) << '\n';
    }

    void write_artifacts(const ExperimentResult& result)
    {
        namespace fs = std::filesystem;
        const fs::path dir(result.config.out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());

        auto open = [](const fs::path& path) {
            std::ofstream out(path);
            if (!out)
                throw Error("cannot write '" + path.string() + "'");
            return out;
        };
        {
            auto out = open(dir / (result.config.name + ".csv"));
            write_csv(out, result);
        }
        {
            auto out = open(dir / (result.config.name + ".json"));
            write_json(out, result);
        }
    }
} // namespace structfilt
