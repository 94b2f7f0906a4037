#ifndef STRUCTFILT_HARNESS_HPP
#define STRUCTFILT_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "structfilt/solvers.hpp"

namespace structfilt
{
    enum class SweepKind
    {
        H, ///< values are element counts, degree fixed
        P, ///< values are degrees, element count fixed
    };

    /// One experiment. Keys in the config file match the field names
    /// (problem, sweep, values, degree, elements, dt, tfinal, filter, tol, out,
    /// seed, deterministic, eps, c, gamma, mu).
    struct ExperimentConfig
    {
        std::string name = "experiment";
        std::string problem = "advection-sine"; ///< advection-sine | advection-hat | cg-diffusion-reaction
        SweepKind sweep = SweepKind::H;
        std::vector<std::size_t> values{4, 8, 16, 32};
        std::size_t degree = 3;
        std::size_t elements = 16;
        /// Empty: CFL default for advection (dt <= 0.1 h / (a (2p+1)), rounded to divide T), 1e-4 otherwise.
        std::optional<double> dt;
        double tfinal = 1.0;
        FilterVariant filter = FilterVariant::Off;
        double tolerance = 1e-10;
        std::string out_dir = "out";
        std::uint64_t seed = 0;
        bool deterministic = false;
        // manufactured CG solution
        double eps = 25.0;
        double c = 20.0;
        double gamma = 1.0;
        double mu = 1.0;

        bool is_dg() const { return problem != "cg-diffusion-reaction"; }

        /// Throws ConfigError.
        void validate() const;
        /// Applies one key=value pair; throws ConfigError on unknown keys or bad values.
        void set(const std::string& key, const std::string& value);
    };

    /// @brief Flat key=value text with optional [section] headers.
    ///
    /// Keys before the first header are defaults for every section; each
    /// section is one experiment named after its header. '#' starts a comment.
    /// Without headers the defaults form a single experiment.
    std::vector<ExperimentConfig> parse_config(std::istream& in);
    std::vector<ExperimentConfig> load_config(const std::string& path);

    struct TimingSummary
    {
        std::size_t steps = 0;
        double filter_time = 0.0;
        double solver_time = 0.0;
        /// filter_time / (filter_time + solver_time), 0 when nothing was timed.
        double filter_fraction = 0.0;
        double avg_flagged = 0.0;
        std::size_t iterations_total = 0;
    };

    TimingSummary report_timing(const std::vector<StepReport>& reports);

    struct ConvergenceRow
    {
        std::size_t sweep_value = 0;
        std::size_t dof = 0;
        double dt = 0.0;
        double l2_error = 0.0;
        /// log(e_prev / e) / log(value / value_prev); NaN for the first row or after a failed row.
        double observed_order = 0.0;
        double avg_flagged = 0.0;
        double filter_time_fraction = 0.0;
        std::size_t iterations_total = 0;
        std::size_t clamped_elements = 0;
        std::size_t relaxed_elements = 0;
        bool ok = true;
        std::string error;
    };

    struct ExperimentResult
    {
        ExperimentConfig config;
        std::vector<ConvergenceRow> rows;

        bool all_ok() const;
    };

    /// Time step used for one sweep point.
    double resolve_dt(const ExperimentConfig& config, std::size_t elements, std::size_t degree);

    /// Runs the sweep. Per-row simulation errors are recorded in the row, not thrown.
    ExperimentResult run_experiment(const ExperimentConfig& config);

    /// Header plus one line per row; failed rows carry "error" in the numeric columns.
    void write_csv(std::ostream& out, const ExperimentResult& result);
    void write_json(std::ostream& out, const ExperimentResult& result);
    /// Writes <out>/<name>.csv and <out>/<name>.json.
    void write_artifacts(const ExperimentResult& result);
} // namespace structfilt

#endif
