#ifndef STRUCTFILT_FILTER_HPP
#define STRUCTFILT_FILTER_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "structfilt/constraint.hpp"
#include "structfilt/error.hpp"

namespace structfilt
{
    enum class ProjectionMethod
    {
        /// Project onto the hyperplane of the current worst point only.
        Greedy,
        /// Project the input onto the intersection of every halfspace selected
        /// so far (least-distance subproblem). First step equals Greedy; the
        /// limit is the Euclidean projection onto the feasible set.
        ActiveSet,
    };

    struct FilterConfig
    {
        /// Stop once every signed distance is >= -tolerance.
        double tolerance = 1e-10;
        std::size_t max_iterations = 10000;
        /// Step multiplier in (0, 2]; 1 is the exact hyperplane projection.
        double relaxation = 1.0;
        /// Report Infeasible when the best minimum distance has not improved by
        /// more than min(tolerance, 1% of its magnitude) over this many
        /// iterations. Zero disables the check.
        std::size_t stall_window = 50;
        ProjectionMethod method = ProjectionMethod::ActiveSet;

        /// Throws std::invalid_argument on out-of-range values.
        void validate() const;
    };

    struct FilterReport
    {
        std::size_t iterations = 0;
        bool converged = true;
        /// Smallest signed distance at termination. Exact when it is negative;
        /// otherwise a lower bound (pruned pieces of multi-piece systems count as 0).
        double final_min_distance = 0.0;
        double wall_time = 0.0;
        /// Number of hyperplane projections per constraint family.
        std::vector<std::size_t> constraint_activations;

        /// Associative combination of reports from independent projections.
        FilterReport& merge(const FilterReport& other);
    };

    /// Iteration limit reached; carries the best iterate found.
    class NotConverged : public Error
    {
    public:
        NotConverged(const std::string& what, Vector best, FilterReport report)
            : Error(what), best_(std::move(best)), report_(std::move(report))
        {
        }
        const Vector& best() const { return best_; }
        const FilterReport& report() const { return report_; }

    private:
        Vector best_;
        FilterReport report_;
    };

    /// A finite collection of constraint pieces acting on one coordinate vector.
    struct ConstraintSystem
    {
        std::size_t dimension = 0;
        std::size_t family_count = 0;
        std::vector<ConstraintSegment> segments;

        /// One reference-interval piece per family on the n-dimensional Legendre basis.
        static ConstraintSystem reference(const std::vector<ConstraintFamily>& families, std::size_t n);

        /// Global minimizer of the signed distance over every piece. Ties go to
        /// the lower family index, then the lower piece index, then smaller x.
        /// Pieces whose gap is certified nonnegative are skipped when there is
        /// more than one piece.
        SignedDistanceSample minimize(const Vector& v) const;
    };

    struct ProjectionResult
    {
        Vector coeffs;
        FilterReport report;
    };

    /// @brief Greedy hyperplane projection onto the feasible set.
    ///
    /// Repeatedly locates the most violated point constraint. With
    /// ProjectionMethod::Greedy the iterate moves onto its supporting
    /// hyperplane, v <- v + relaxation * |s| h; with ActiveSet the input is
    /// projected onto all halfspaces selected so far. Stops when
    /// min s >= -tolerance.
    ProjectionResult greedy_project(const Vector& coeffs, const ConstraintSystem& system, const FilterConfig& config);

    ProjectionResult greedy_project(const Vector& coeffs, const std::vector<ConstraintFamily>& families,
                                    const FilterConfig& config);

    /// K linear functionals to preserve, with an orthonormal basis Q of their
    /// span and an orthonormal completion P.
    struct EqualityConstraintSet
    {
        Matrix vectors; ///< n x K, columns are the functionals
        Matrix Q;       ///< n x K, orthonormal columns, span(Q) = span(vectors)
        Matrix P;       ///< n x (n-K), orthonormal completion
        Matrix R;       ///< K x K upper triangular, vectors = Q R

        std::size_t dimension() const { return static_cast<std::size_t>(vectors.rows()); }
        std::size_t count() const { return static_cast<std::size_t>(vectors.cols()); }

        /// <q_k, v> for every functional.
        Vector values(const Vector& v) const { return vectors.transpose() * v; }

        /// The component in span(Q) of any u with <q_k, u> = targets_k.
        Vector fixed_part(const Vector& targets) const;
    };

    /// Throws RankDeficient when the vectors are linearly dependent (drop tolerance 1e-12).
    EqualityConstraintSet build_equality_set(const std::vector<Vector>& vectors);

    /// @brief Inequality system restricted to an affine subspace of fixed functional values.
    ///
    /// The reduced pieces act on z in R^{n-K} through action * P and are
    /// precomputed once; only the bound shift depends on the state.
    class EqualityReducedProblem
    {
    public:
        EqualityReducedProblem(ConstraintSystem full, EqualityConstraintSet equalities);

        const ConstraintSystem& full() const { return full_; }
        const EqualityConstraintSet& equalities() const { return eq_; }

        /// Projects `coeffs` onto the feasible set while keeping the functionals at
        /// `targets` (default: their values at `coeffs`). Returns Q Q^T v + P z*.
        ProjectionResult solve(const Vector& coeffs, const FilterConfig& config,
                               const std::optional<Vector>& targets = std::nullopt) const;

        /// Reduced system for a given fixed component u_fixed in span(Q).
        ConstraintSystem bind(const Vector& fixed) const;

    private:
        ConstraintSystem full_;
        EqualityConstraintSet eq_;
        ConstraintSystem reduced_;
    };

    ProjectionResult project_with_equalities(const Vector& coeffs, const std::vector<ConstraintFamily>& families,
                                             const EqualityConstraintSet& equalities, const FilterConfig& config);
} // namespace structfilt

#endif
