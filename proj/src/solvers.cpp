#include "structfilt/solvers.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "structfilt/error.hpp"

namespace structfilt
{
    namespace
    {
        using Clock = std::chrono::steady_clock;

        Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

        double seconds_since(Clock::time_point start)
        {
            return std::chrono::duration<double>(Clock::now() - start).count();
        }

        double periodic_wrap(double x, double a, double b)
        {
            const double L = b - a;
            double y = std::fmod(x - a, L);
            if (y < 0.0)
                y += L;
            return a + y;
        }

        std::string step_context(std::size_t step, const std::exception& err)
        {
            return "step " + std::to_string(step) + ": " + err.what();
        }

        FieldFilterOptions field_options(const RunOptions& options)
        {
            FieldFilterOptions out;
            out.config = options.filter;
            out.policy = options.policy;
            out.preserve_boundaries = options.variant == FilterVariant::PositivityFlux ||
                                      options.variant == FilterVariant::PositivityFluxMass;
            out.preserve_element_mass = options.variant == FilterVariant::PositivityFluxMass;
            return out;
        }

        std::size_t initial_points(std::size_t degree) { return std::max<std::size_t>(2 * degree + 4, 24); }
    } // namespace

    AdvectionProblem advection_sine()
    {
        AdvectionProblem p;
        p.name = "advection-sine";
        p.exact = [](double x, double t) {
            constexpr double pi = std::numbers::pi;
            return 0.5 * std::sin(2.0 * pi * x - 2.0 * pi * t - 0.5 * pi) + 0.5;
        };
        return p;
    }

    AdvectionProblem advection_hat()
    {
        AdvectionProblem p;
        p.name = "advection-hat";
        p.exact = [](double x, double t) { return 1.0 - std::abs(periodic_wrap(x - t, -1.0, 1.0)); };
        return p;
    }

    DiffusionReactionProblem manufactured_tanh(double eps, double c, double gamma, double mu)
    {
        DiffusionReactionProblem p;
        p.name = "cg-diffusion-reaction";
        p.gamma = gamma;
        p.mu = mu;
        p.exact = [=](double x, double t) { return std::exp(-gamma * t) * (std::tanh(eps * (x + 0.4) - c * t) + 1.0); };
        p.forcing = [=](double x, double t) {
            const double decay = std::exp(-gamma * t);
            const double th = std::tanh(eps * (x + 0.4) - c * t);
            const double sech2 = 1.0 - th * th;
            const double u = decay * (th + 1.0);
            const double u_t = -gamma * u - c * decay * sech2;
            const double u_xx = -2.0 * eps * eps * decay * th * sech2;
            return u_t - gamma * u_xx - mu * u * (1.0 - u * u);
        };
        return p;
    }

    // ---------------------------------------------------------------- DG advection

    DGAdvectionOperator::DGAdvectionOperator(Mesh1D mesh, std::size_t n, double speed)
        : mesh_(std::move(mesh)), n_(n), speed_(speed), DT_(derivative_matrix(n).transpose()),
          psi_left_(basis_values(-1.0, n)), psi_right_(basis_values(1.0, n))
    {
    }

    Vector DGAdvectionOperator::rhs(const Vector& coeffs) const
    {
        const std::size_t E = mesh_.elements();
        const auto n = idx(n_);
        // one-sided traces at every element's ends
        std::vector<double> left_trace(E);
        std::vector<double> right_trace(E);
        for (std::size_t e = 0; e < E; ++e)
        {
            const auto c = coeffs.segment(idx(e) * n, n);
            const double scale = std::sqrt(2.0 / mesh_.width(e));
            left_trace[e] = scale * psi_left_.dot(c);
            right_trace[e] = scale * psi_right_.dot(c);
        }
        Vector out(coeffs.size());
        for (std::size_t e = 0; e < E; ++e)
        {
            const double h = mesh_.width(e);
            const std::size_t prev = (e + E - 1) % E;
            const std::size_t next = (e + 1) % E;
            const double flux_left = speed_ * (speed_ >= 0.0 ? right_trace[prev] : left_trace[e]);
            const double flux_right = speed_ * (speed_ >= 0.0 ? right_trace[e] : left_trace[next]);
            const auto c = coeffs.segment(idx(e) * n, n);
            out.segment(idx(e) * n, n) = (speed_ * 2.0 / h) * (DT_ * c) -
                                         std::sqrt(2.0 / h) * (flux_right * psi_right_ - flux_left * psi_left_);
        }
        return out;
    }

    void DGAdvectionOperator::step(DGField& field, double dt) const
    {
        const Vector& c = field.coeffs();
        const Vector k1 = rhs(c);
        const Vector k2 = rhs(c + dt * k1);
        field.coeffs() = c + (0.5 * dt) * (k1 + k2);
    }

    DGField dg_advection_step(const DGField& field, double speed, double dt)
    {
        DGField out = field;
        DGAdvectionOperator(field.mesh(), field.local_dimension(), speed).step(out, dt);
        return out;
    }

    // ---------------------------------------------------------------- CG diffusion-reaction

    CGDiffusionReactionStepper::CGDiffusionReactionStepper(std::shared_ptr<const CGSpace> space,
                                                           DiffusionReactionProblem problem, double dt)
        : space_(std::move(space)), problem_(std::move(problem)), dt_(dt)
    {
        if (!(dt_ > 0.0))
            throw std::invalid_argument("CGDiffusionReactionStepper: dt must be positive");
        const double half = 0.5 * problem_.gamma * dt_;
        A_ = space_->mass() - half * space_->stiffness();
        B_ = space_->mass() + half * space_->stiffness();
        const auto N = idx(space_->dimension());
        if (N > 2)
        {
            Eigen::SparseMatrix<double> interior = B_.block(1, 1, N - 2, N - 2);
            solver_.compute(interior);
            if (solver_.info() != Eigen::Success)
                throw SingularOperator("CGDiffusionReactionStepper: implicit operator could not be factored");
            const Vector d = solver_.vectorD();
            if (!(d.minCoeff() > 0.0))
                throw SingularOperator("CGDiffusionReactionStepper: implicit operator is not positive definite");
        }
    }

    Vector CGDiffusionReactionStepper::explicit_load(const Vector& v, double t) const
    {
        const Mesh1D& mesh = space_->mesh();
        const std::size_t p = space_->degree();
        const QuadratureRule& rule = gauss_legendre(2 * p + 3);
        const Matrix& B = space_->local_basis();
        Vector load = Vector::Zero(v.size());
        Vector local(idx(p + 1));
        for (std::size_t e = 0; e < mesh.elements(); ++e)
        {
            const double h = mesh.width(e);
            for (std::size_t i = 0; i <= p; ++i)
                local[idx(i)] = v[idx(e * p + i)];
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                const Vector phi = B.transpose() * basis_values(rule.nodes[q], p + 1);
                const double u = phi.dot(local);
                const double x = mesh.to_physical(e, rule.nodes[q]);
                double value = problem_.reaction(u);
                if (problem_.forcing)
                    value += problem_.forcing(x, t);
                const double weight = 0.5 * h * rule.weights[q] * value;
                for (std::size_t i = 0; i <= p; ++i)
                    load[idx(e * p + i)] += weight * phi[idx(i)];
            }
        }
        return load;
    }

    Vector CGDiffusionReactionStepper::step(CGField& field, double t, const std::optional<Vector>& prev_load) const
    {
        const Vector& v = field.coeffs();
        const Vector load = explicit_load(v, t);
        const Vector extrapolated = prev_load ? Vector(1.5 * load - 0.5 * *prev_load) : load;
        const Vector rhs = A_ * v + dt_ * extrapolated;

        const auto N = v.size();
        Vector next = Vector::Zero(N);
        next[0] = problem_.exact(space_->mesh().a(), t + dt_);
        next[N - 1] = problem_.exact(space_->mesh().b(), t + dt_);
        if (N > 2)
        {
            const Vector r = rhs - B_ * next;
            next.segment(1, N - 2) = solver_.solve(r.segment(1, N - 2));
        }
        field.coeffs() = next;
        return load;
    }

    CGField cg_cnab2_step(const CGField& field, const std::optional<Vector>& prev_load,
                          const DiffusionReactionProblem& problem, double t, double dt)
    {
        CGField out = field;
        CGDiffusionReactionStepper(field.space_ptr(), problem, dt).step(out, t, prev_load);
        return out;
    }

    // ---------------------------------------------------------------- time loops

    std::string to_string(FilterVariant variant)
    {
        switch (variant)
        {
        case FilterVariant::Off:
            return "off";
        case FilterVariant::Positivity:
            return "P";
        case FilterVariant::PositivityFlux:
            return "PF";
        case FilterVariant::PositivityFluxMass:
            return "PFI";
        }
        return "off";
    }

    FilterVariant parse_filter_variant(const std::string& name)
    {
        if (name == "off")
            return FilterVariant::Off;
        if (name == "P")
            return FilterVariant::Positivity;
        if (name == "PF")
            return FilterVariant::PositivityFlux;
        if (name == "PFI")
            return FilterVariant::PositivityFluxMass;
        throw ConfigError("unknown filter variant '" + name + "' (expected off, P, PF or PFI)");
    }

    std::size_t step_count(double dt, double tfinal)
    {
        if (!(dt > 0.0) || !(tfinal > 0.0))
            throw std::invalid_argument("step_count: dt and T must be positive");
        const double ratio = tfinal / dt;
        const double rounded = std::round(ratio);
        if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
            throw std::invalid_argument("step_count: dt does not divide T");
        return static_cast<std::size_t>(rounded);
    }

    RunResult<DGField> run_simulation(const AdvectionProblem& problem, const Mesh1D& mesh, std::size_t degree,
                                      double dt, double tfinal, const RunOptions& options,
                                      const std::function<void(const StepView<DGField>&)>& observer)
    {
        const std::size_t nsteps = step_count(dt, tfinal);
        const std::size_t n = degree + 1;
        RunResult<DGField> result{project_function(problem.at(0.0), mesh, n, initial_points(degree)), {}};
        const DGAdvectionOperator op(mesh, n, problem.speed);

        std::optional<DGFilter> filter;
        if (options.variant != FilterVariant::Off)
        {
            filter.emplace(mesh, n, std::vector<ConstraintFamily>{ConstraintFamily::positivity()},
                           field_options(options));
            // the scheme assumes a feasible starting state
            try
            {
                filter->apply(result.field);
            }
            catch (const Infeasible& err)
            {
                throw Infeasible(step_context(0, err));
            }
        }

        result.steps.reserve(nsteps);
        for (std::size_t k = 1; k <= nsteps; ++k)
        {
            StepReport report;
            report.step = k;
            auto start = Clock::now();
            op.step(result.field, dt);
            report.solver_time = seconds_since(start);

            std::optional<DGField> before;
            if (observer)
                before.emplace(result.field);
            FieldFilterReport filtered;
            if (filter)
            {
                start = Clock::now();
                try
                {
                    filtered = filter->apply(result.field);
                }
                catch (const Infeasible& err)
                {
                    throw Infeasible(step_context(k, err));
                }
                catch (const NotConverged& err)
                {
                    throw NotConverged(step_context(k, err), err.best(), err.report());
                }
                report.filter_time = seconds_since(start);
                report.filtered_elements = filtered.flagged.size();
                report.filter_iterations = filtered.filter.iterations;
                result.clamped_elements += filtered.clamped_elements;
                result.relaxed_elements += filtered.relaxed_elements;
            }
            if (observer)
                observer({k, static_cast<double>(k) * dt, *before, result.field, filter ? &filtered : nullptr});
            result.steps.push_back(report);
        }
        return result;
    }

    RunResult<CGField> run_simulation(const DiffusionReactionProblem& problem, const Mesh1D& mesh,
                                      std::size_t degree, double dt, double tfinal, const RunOptions& options,
                                      const std::function<void(const StepView<CGField>&)>& observer)
    {
        if (options.variant == FilterVariant::PositivityFlux || options.variant == FilterVariant::PositivityFluxMass)
            throw ConfigError("filter variants PF and PFI apply to DG problems only");
        const std::size_t nsteps = step_count(dt, tfinal);
        auto space = std::make_shared<const CGSpace>(mesh, degree);
        RunResult<CGField> result{project_function(problem.at(0.0), space, initial_points(degree)), {}};
        const CGDiffusionReactionStepper stepper(space, problem, dt);

        std::optional<CGFilter> filter;
        if (options.variant != FilterVariant::Off)
        {
            filter.emplace(space, std::vector<ConstraintFamily>{ConstraintFamily::positivity()},
                           field_options(options));
            try
            {
                filter->apply(result.field);
            }
            catch (const Infeasible& err)
            {
                throw Infeasible(step_context(0, err));
            }
        }

        std::optional<Vector> prev_load;
        result.steps.reserve(nsteps);
        for (std::size_t k = 1; k <= nsteps; ++k)
        {
            StepReport report;
            report.step = k;
            const double t = static_cast<double>(k - 1) * dt;
            auto start = Clock::now();
            prev_load = stepper.step(result.field, t, prev_load);
            report.solver_time = seconds_since(start);

            std::optional<CGField> before;
            if (observer)
                before.emplace(result.field);
            FieldFilterReport filtered;
            if (filter)
            {
                start = Clock::now();
                try
                {
                    filtered = filter->apply(result.field);
                }
                catch (const Infeasible& err)
                {
                    throw Infeasible(step_context(k, err));
                }
                catch (const NotConverged& err)
                {
                    throw NotConverged(step_context(k, err), err.best(), err.report());
                }
                report.filter_time = seconds_since(start);
                report.filtered_elements = filtered.flagged.size();
                report.filter_iterations = filtered.filter.iterations;
            }
            if (observer)
                observer({k, static_cast<double>(k) * dt, *before, result.field, filter ? &filtered : nullptr});
            result.steps.push_back(report);
        }
        return result;
    }
} // namespace structfilt
