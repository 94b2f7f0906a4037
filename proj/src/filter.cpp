#include "structfilt/filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

namespace structfilt
{
    namespace
    {
        using Clock = std::chrono::steady_clock;



        double seconds_since(Clock::time_point start)
        {
            return std::chrono::duration<double>(Clock::now() - start).count();
        }

        // Lawson-Hanson: min ||E u - f|| subject to u >= 0.
        Vector nonnegative_least_squares(const Matrix& E, const Vector& f)
        {
            const Eigen::Index m = E.cols();
            Vector u = Vector::Zero(m);
            std::vector<char> passive(static_cast<std::size_t>(m), 0);
            std::vector<char> rejected(static_cast<std::size_t>(m), 0);
            const double tol = 1e-15 * (1.0 + E.norm()) * (1.0 + f.norm());

            auto solve_passive = [&](std::vector<Eigen::Index>& cols) {
                cols.clear();
                for (Eigen::Index j = 0; j < m; ++j)
                    if (passive[static_cast<std::size_t>(j)])
                        cols.push_back(j);
                Matrix Ep(E.rows(), static_cast<Eigen::Index>(cols.size()));
                for (std::size_t k = 0; k < cols.size(); ++k)
                    Ep.col(static_cast<Eigen::Index>(k)) = E.col(cols[k]);
                return Vector(Ep.colPivHouseholderQr().solve(f));
            };

            std::vector<Eigen::Index> cols;
            for (Eigen::Index outer = 0; outer < 3 * m + 10; ++outer)
            {
                const Vector grad = E.transpose() * (f - E * u);
                Eigen::Index enter = -1;
                double best = tol;
                for (Eigen::Index j = 0; j < m; ++j)
                    if (!passive[static_cast<std::size_t>(j)] && !rejected[static_cast<std::size_t>(j)] && grad[j] > best)
                    {
                        best = grad[j];
                        enter = j;
                    }
                if (enter < 0)
                    break;
                passive[static_cast<std::size_t>(enter)] = 1;
                {
                    // a column whose own coefficient comes out nonpositive cannot reduce the residual
                    const Vector z = solve_passive(cols);
                    const auto pos = std::find(cols.begin(), cols.end(), enter) - cols.begin();
                    if (!(z[pos] > 0.0))
                    {
                        passive[static_cast<std::size_t>(enter)] = 0;
                        rejected[static_cast<std::size_t>(enter)] = 1;
                        continue;
                    }
                }
                std::fill(rejected.begin(), rejected.end(), 0);
                for (Eigen::Index inner = 0; inner <= m; ++inner)
                {
                    const Vector z = solve_passive(cols);
                    double alpha = 1.0;
                    std::size_t blocking = cols.size();
                    for (std::size_t k = 0; k < cols.size(); ++k)
                    {
                        const double zk = z[static_cast<Eigen::Index>(k)];
                        if (zk <= 0.0)
                        {
                            const double uk = u[cols[k]];
                            const double a = uk / (uk - zk);
                            if (blocking == cols.size() || a < alpha)
                            {
                                alpha = a;
                                blocking = k;
                            }
                        }
                    }
                    if (blocking == cols.size())
                    {
                        u.setZero();
                        for (std::size_t k = 0; k < cols.size(); ++k)
                            u[cols[k]] = z[static_cast<Eigen::Index>(k)];
                        break;
                    }
                    const double umax = u.cwiseAbs().maxCoeff();
                    for (std::size_t k = 0; k < cols.size(); ++k)
                    {
                        double& uk = u[cols[k]];
                        uk += alpha * (z[static_cast<Eigen::Index>(k)] - uk);
                        if (k == blocking || uk <= 1e-15 * umax)
                        {
                            uk = 0.0;
                            passive[static_cast<std::size_t>(cols[k])] = 0;
                        }
                    }
                }
            }
            return u;
        }

        // Least-distance program min ||w|| subject to A w >= d, through NNLS on
        // [A^T; d^T] u ~ e_{n+1}. Returns nothing when the halfspaces do not intersect.
        std::optional<Vector> least_distance(const Matrix& A, const Vector& d, Vector& multipliers)
        {
            const Eigen::Index n = A.cols();
            const double scale = std::max(d.cwiseAbs().maxCoeff(), 1e-300);
            Matrix E(n + 1, A.rows());
            E.topRows(n) = A.transpose();
            E.row(n) = (d / scale).transpose();
            Vector f = Vector::Zero(n + 1);
            f[n] = 1.0;
            const Vector u = nonnegative_least_squares(E, f);
            multipliers = u;
            const Vector r = E * u - f;
            if (!(-r[n] > 1e-14))
                return std::nullopt;
            return Vector((-scale / r[n]) * r.head(n));
        }
    } // namespace

    void FilterConfig::validate() const
    {
        if (!(tolerance > 0.0))
            throw std::invalid_argument("FilterConfig: tolerance must be positive");
        if (max_iterations < 1)
            throw std::invalid_argument("FilterConfig: max_iterations must be at least 1");
        if (!(relaxation > 0.0 && relaxation <= 2.0))
            throw std::invalid_argument("FilterConfig: relaxation must lie in (0, 2]");
    }

    FilterReport& FilterReport::merge(const FilterReport& other)
    {
        iterations += other.iterations;
        converged = converged && other.converged;
        final_min_distance = std::min(final_min_distance, other.final_min_distance);
        wall_time += other.wall_time;
        if (other.constraint_activations.size() > constraint_activations.size())
            constraint_activations.resize(other.constraint_activations.size(), 0);
        for (std::size_t k = 0; k < other.constraint_activations.size(); ++k)
            constraint_activations[k] += other.constraint_activations[k];
        return *this;
    }

    ConstraintSystem ConstraintSystem::reference(const std::vector<ConstraintFamily>& families, std::size_t n)
    {
        ConstraintSystem system;
        system.dimension = n;
        system.family_count = families.size();
        for (std::size_t k = 0; k < families.size(); ++k)
            system.segments.push_back(reference_segment(families[k], n, k));
        return system;
    }

    SignedDistanceSample ConstraintSystem::minimize(const Vector& v) const
    {
        if (segments.empty())
            throw std::invalid_argument("ConstraintSystem::minimize: no constraint pieces");

        const bool prune = segments.size() > 1;
        SignedDistanceSample best{0.0, std::numeric_limits<double>::infinity(), 0, 0};
        bool any_pruned = false;
        for (const auto& seg : segments)
        {
            if (prune)
            {
                const LegendreSeries g = seg.gap(v);
                if (series_lower_bound(g) >= 0.0 || polynomial_minimum(g).value >= 0.0)
                {
                    any_pruned = true;
                    continue;
                }
            }
            const SignedDistanceSample sample = seg.minimize(v);
            if (sample.value < best.value)
                best = sample;
        }
        if (any_pruned && best.value > 0.0)
            best = {-1.0, 0.0, segments.front().family_index(), segments.front().segment_index()};
        return best;
    }

    ProjectionResult greedy_project(const Vector& coeffs, const ConstraintSystem& system, const FilterConfig& config)
    {
        config.validate();
        if (static_cast<std::size_t>(coeffs.size()) != system.dimension)
            throw std::invalid_argument("greedy_project: coefficient dimension does not match constraint system");

        const auto start = Clock::now();
        ProjectionResult result{coeffs, {}};
        FilterReport& report = result.report;
        report.constraint_activations.assign(system.family_count, 0);

        Vector& v = result.coeffs;
        Vector best_v = v;
        double best_min = -std::numeric_limits<double>::infinity();
        std::deque<double> history; // best_min over the last stall_window iterations

        // active-set state: selected points, their multipliers from the last subproblem
        struct Cut
        {
            std::size_t segment;
            double x;
            Vector normal;
            double offset; // halfspace normal^T u >= offset
        };
        std::vector<Cut> cuts;
        Vector multipliers;
        bool greedy_only = false; // subproblem no longer trustworthy

        auto fail = [&]() {
            report.converged = false;
            report.wall_time = seconds_since(start);
        };

        while (true)
        {
            const SignedDistanceSample worst = system.minimize(v);
            report.final_min_distance = worst.value;
            if (worst.value == -std::numeric_limits<double>::infinity())
            {
                fail();
                throw Infeasible("greedy_project: a violated constraint has a vanishing normal");
            }
            if (worst.value > best_min)
            {
                best_min = worst.value;
                best_v = v;
            }
            if (worst.value >= -config.tolerance)
                break;

            if (config.stall_window > 0)
            {
                history.push_back(best_min);
                if (history.size() > config.stall_window)
                {
                    const double before = history.front();
                    history.pop_front();
                    const double improvement = best_min - before;
                    if (improvement <= std::min(config.tolerance, 0.01 * std::abs(before)))
                    {
                        fail();
                        throw Infeasible("greedy_project: no progress over " +
                                         std::to_string(config.stall_window) + " iterations");
                    }
                }
            }

            if (report.iterations >= config.max_iterations)
            {
                fail();
                report.final_min_distance = best_min;
                throw NotConverged("greedy_project: iteration limit reached", best_v, report);
            }

            std::size_t worst_segment = 0;
            while (!(system.segments[worst_segment].family_index() == worst.family_index &&
                     system.segments[worst_segment].segment_index() == worst.segment_index))
                ++worst_segment;
            const Vector h = system.segments[worst_segment].unit_normal(worst.x);

            if (config.method == ProjectionMethod::ActiveSet && !greedy_only)
            {
                // inactive points no longer shape the subproblem
                std::vector<Cut> kept;
                for (std::size_t i = 0; i < cuts.size(); ++i)
                    if (multipliers[static_cast<Eigen::Index>(i)] > 0.0)
                        kept.push_back(cuts[i]);
                cuts = std::move(kept);
                bool duplicate = false;
                for (const Cut& c : cuts)
                    if (c.segment == worst_segment && std::abs(c.x - worst.x) <= 1e-13)
                        duplicate = true;
                if (!duplicate)
                    cuts.push_back({worst_segment, worst.x, h, h.dot(v) - worst.value});

                const auto m = static_cast<Eigen::Index>(cuts.size());
                Matrix normals(m, v.size());
                Vector offsets(m);
                for (Eigen::Index i = 0; i < m; ++i)
                {
                    normals.row(i) = cuts[static_cast<std::size_t>(i)].normal.transpose();
                    offsets[i] = cuts[static_cast<std::size_t>(i)].offset;
                }
                const auto w = least_distance(normals, offsets - normals * coeffs, multipliers);
                if (!w)
                {
                    fail();
                    throw Infeasible("greedy_project: selected halfspaces have empty intersection");
                }
                const Vector target = coeffs + *w;
                if (h.dot(target) - (h.dot(v) - worst.value) >= -config.tolerance)
                    v += config.relaxation * (target - v);
                else
                    greedy_only = true;
            }
            if (config.method == ProjectionMethod::Greedy || greedy_only)
                v += (config.relaxation * std::abs(worst.value)) * h;

            ++report.constraint_activations[worst.family_index];
            ++report.iterations;
        }
        report.wall_time = seconds_since(start);
        return result;
    }

    ProjectionResult greedy_project(const Vector& coeffs, const std::vector<ConstraintFamily>& families,
                                    const FilterConfig& config)
    {
        if (families.empty())
            throw std::invalid_argument("greedy_project: no constraint families");
        return greedy_project(coeffs, ConstraintSystem::reference(families, static_cast<std::size_t>(coeffs.size())),
                              config);
    }

    Vector EqualityConstraintSet::fixed_part(const Vector& targets) const
    {
        // Q^T u = R^{-T} targets
        const Vector c = R.transpose().triangularView<Eigen::Lower>().solve(targets);
        return Q * c;
    }

    EqualityConstraintSet build_equality_set(const std::vector<Vector>& vectors)
    {
        if (vectors.empty())
            throw std::invalid_argument("build_equality_set: no vectors");
        const auto n = vectors.front().size();
        const auto K = static_cast<Eigen::Index>(vectors.size());
        if (K > n)
            throw RankDeficient("build_equality_set: more functionals than dimensions");

        EqualityConstraintSet eq;
        eq.vectors.resize(n, K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            if (vectors[static_cast<std::size_t>(k)].size() != n)
                throw std::invalid_argument("build_equality_set: vectors differ in length");
            eq.vectors.col(k) = vectors[static_cast<std::size_t>(k)];
        }

        // modified Gram-Schmidt with one reorthogonalization pass
        eq.Q = eq.vectors;
        eq.R = Matrix::Zero(K, K);
        for (Eigen::Index k = 0; k < K; ++k)
        {
            const double original = eq.vectors.col(k).norm();
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index j = 0; j < k; ++j)
                {
                    const double r = eq.Q.col(j).dot(eq.Q.col(k));
                    eq.R(j, k) += r;
                    eq.Q.col(k) -= r * eq.Q.col(j);
                }
            const double norm = eq.Q.col(k).norm();
            if (!(norm > 1e-12 * original))
                throw RankDeficient("build_equality_set: functional " + std::to_string(k) +
                                    " is linearly dependent on the previous ones");
            eq.R(k, k) = norm;
            eq.Q.col(k) /= norm;
        }

        if (K == n)
        {
            eq.P = Matrix(n, 0);
            return eq;
        }
        Eigen::HouseholderQR<Matrix> qr(eq.Q);
        const Matrix full = qr.householderQ() * Matrix::Identity(n, n);
        eq.P = full.rightCols(n - K);
        // remove the residual component along Q left by roundoff
        eq.P -= eq.Q * (eq.Q.transpose() * eq.P);
        Eigen::HouseholderQR<Matrix> qp(eq.P);
        eq.P = qp.householderQ() * Matrix::Identity(n, n - K);
        return eq;
    }

    EqualityReducedProblem::EqualityReducedProblem(ConstraintSystem full, EqualityConstraintSet equalities)
        : full_(std::move(full)), eq_(std::move(equalities))
    {
        if (eq_.dimension() != full_.dimension)
            throw std::invalid_argument("EqualityReducedProblem: dimension mismatch");
        reduced_.dimension = full_.dimension - eq_.count();
        reduced_.family_count = full_.family_count;
        if (reduced_.dimension == 0)
            return;
        for (const auto& seg : full_.segments)
            reduced_.segments.emplace_back(Matrix(seg.action() * eq_.P), seg.bound(), seg.sense(),
                                           seg.family_index(), seg.segment_index());
    }

    ConstraintSystem EqualityReducedProblem::bind(const Vector& fixed) const
    {
        ConstraintSystem bound = reduced_;
        for (std::size_t i = 0; i < bound.segments.size(); ++i)
        {
            const ConstraintSegment& full_seg = full_.segments[i];
            bound.segments[i] = bound.segments[i].with_bound(full_seg.bound() - full_seg.operator_series(fixed));
        }
        return bound;
    }

    ProjectionResult EqualityReducedProblem::solve(const Vector& coeffs, const FilterConfig& config,
                                                   const std::optional<Vector>& targets) const
    {
        config.validate();
        const Vector fixed = targets ? eq_.fixed_part(*targets) : Vector(eq_.Q * (eq_.Q.transpose() * coeffs));

        if (reduced_.dimension == 0)
        {
            // every coordinate is pinned: feasible or not, nothing can move
            const auto start = Clock::now();
            ProjectionResult result{fixed, {}};
            result.report.constraint_activations.assign(full_.family_count, 0);
            const SignedDistanceSample worst = full_.minimize(fixed);
            result.report.final_min_distance = worst.value;
            result.report.wall_time = seconds_since(start);
            if (worst.value < -config.tolerance)
                throw Infeasible("project_with_equalities: equalities determine a violating state");
            return result;
        }

        const Vector z0 = eq_.P.transpose() * coeffs;
        try
        {
            ProjectionResult reduced = greedy_project(z0, bind(fixed), config);
            return {fixed + eq_.P * reduced.coeffs, std::move(reduced.report)};
        }
        catch (const NotConverged& e)
        {
            throw NotConverged(e.what(), fixed + eq_.P * e.best(), e.report());
        }
    }

    ProjectionResult project_with_equalities(const Vector& coeffs, const std::vector<ConstraintFamily>& families,
                                             const EqualityConstraintSet& equalities, const FilterConfig& config)
    {
        if (families.empty())
            throw std::invalid_argument("project_with_equalities: no constraint families");
        EqualityReducedProblem problem(ConstraintSystem::reference(families, static_cast<std::size_t>(coeffs.size())),
                                       equalities);
        return problem.solve(coeffs, config);
    }
} // namespace structfilt
