#ifndef STRUCTFILT_SOLVERS_HPP
#define STRUCTFILT_SOLVERS_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "structfilt/discretization.hpp"

namespace structfilt
{
    using SpaceTimeFunction = std::function<double(double, double)>;

    /// u_t + a u_x = 0 on a periodic domain.
    struct AdvectionProblem
    {
        double speed = 1.0;
        double a = -1.0;
        double b = 1.0;
        /// Exact solution u(x, t); its t = 0 slice is the initial condition.
        SpaceTimeFunction exact;
        std::string name;

        ScalarFunction at(double t) const
        {
            return [f = exact, t](double x) { return f(x, t); };
        }
    };

    /// 0.5 sin(2 pi x - 2 pi t - pi/2) + 0.5 on [-1,1] with unit speed; touches zero.
    AdvectionProblem advection_sine();
    /// Periodic triangular hat 1 - |x| on [-1,1], translated with unit speed.
    AdvectionProblem advection_hat();

    /// u_t = gamma u_xx + r(u) + f(x,t) with r(u) = mu u (1 - u^2) and Dirichlet data from `exact`.
    struct DiffusionReactionProblem
    {
        double gamma = 1.0;
        double mu = 1.0;
        double a = -1.0;
        double b = 1.0;
        SpaceTimeFunction exact;
        SpaceTimeFunction forcing;
        std::string name;

        double reaction(double u) const { return mu * u * (1.0 - u * u); }
        ScalarFunction at(double t) const
        {
            return [f = exact, t](double x) { return f(x, t); };
        }
    };

    /// exp(-gamma t) (tanh(eps (x + 0.4) - c t) + 1) with the forcing that makes it exact.
    DiffusionReactionProblem manufactured_tanh(double eps = 25.0, double c = 20.0, double gamma = 1.0,
                                               double mu = 1.0);

    /// @brief Semidiscrete upwind DG operator for constant-speed periodic advection.
    ///
    /// In the mapped orthonormal basis the mass matrix is the identity, so
    /// rhs_e = a (2/h) D^T c_e - sqrt(2/h) (F_right psi(1) - F_left psi(-1)).
    class DGAdvectionOperator
    {
    public:
        DGAdvectionOperator(Mesh1D mesh, std::size_t n, double speed);

        Vector rhs(const Vector& coeffs) const;
        /// One Heun (RK2) step.
        void step(DGField& field, double dt) const;

    private:
        Mesh1D mesh_;
        std::size_t n_;
        double speed_;
        Matrix DT_;
        Vector psi_left_;
        Vector psi_right_;
    };

    /// One Heun step of u_t + a u_x = 0 (builds the operator; use DGAdvectionOperator in loops).
    DGField dg_advection_step(const DGField& field, double speed, double dt);

    /// @brief CNAB2 stepper: (M + dt gamma L / 2) v+ = (M - dt gamma L / 2) v + dt (3/2 N - 1/2 N_prev).
    ///
    /// N collects the reaction and forcing loads. Dirichlet vertex values are
    /// imposed strongly from the exact solution; the interior block of B is
    /// factored once.
    class CGDiffusionReactionStepper
    {
    public:
        /// Throws SingularOperator when the interior block of B cannot be factored.
        CGDiffusionReactionStepper(std::shared_ptr<const CGSpace> space, DiffusionReactionProblem problem,
                                   double dt);

        /// Reaction plus forcing load at time t, integrated with 2p+3 Gauss points per element.
        Vector explicit_load(const Vector& v, double t) const;

        /// Advances from t to t + dt. `prev_load` is the load at t - dt (empty: Euler start).
        /// Returns the load at t for the next call.
        Vector step(CGField& field, double t, const std::optional<Vector>& prev_load) const;

    private:
        std::shared_ptr<const CGSpace> space_;
        DiffusionReactionProblem problem_;
        double dt_;
        Eigen::SparseMatrix<double> A_;
        Eigen::SparseMatrix<double> B_;
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
    };

    CGField cg_cnab2_step(const CGField& field, const std::optional<Vector>& prev_load,
                          const DiffusionReactionProblem& problem, double t, double dt);

    enum class FilterVariant
    {
        Off,
        Positivity,                 ///< v
        PositivityFlux,             ///< v_F: element boundary values kept
        PositivityFluxMass,         ///< v_{I+F}: boundary values and element mass kept
    };

    /// "off", "P", "PF", "PFI".
    std::string to_string(FilterVariant variant);
    /// Throws ConfigError on unknown names.
    FilterVariant parse_filter_variant(const std::string& name);

    struct StepReport
    {
        std::size_t step = 0;
        std::size_t filtered_elements = 0;
        std::size_t filter_iterations = 0;
        double filter_time = 0.0;
        double solver_time = 0.0;
    };

    struct RunOptions
    {
        FilterVariant variant = FilterVariant::Off;
        FilterConfig filter;
        InfeasibleElementPolicy policy = InfeasibleElementPolicy::Relax;
    };

    template <class Field>
    struct StepView
    {
        std::size_t step;
        double time;
        const Field& before; ///< state after the timestepper, before filtering
        const Field& after;
        const FieldFilterReport* filter; ///< null when filtering is off
    };

    template <class Field>
    struct RunResult
    {
        Field field;
        std::vector<StepReport> steps;
        std::size_t clamped_elements = 0;
        std::size_t relaxed_elements = 0;
    };

    /// nsteps = T / dt rounded; throws std::invalid_argument when dt does not divide T to 1e-9 relative.
    std::size_t step_count(double dt, double tfinal);

    /// DG advection with degree `degree` (n = degree + 1), filtering after each completed step.
    /// Infeasible and NotConverged are rethrown with the step index in the message.
    RunResult<DGField> run_simulation(const AdvectionProblem& problem, const Mesh1D& mesh, std::size_t degree,
                                      double dt, double tfinal, const RunOptions& options,
                                      const std::function<void(const StepView<DGField>&)>& observer = {});

    /// CG diffusion-reaction; only FilterVariant::Off and Positivity apply.
    RunResult<CGField> run_simulation(const DiffusionReactionProblem& problem, const Mesh1D& mesh,
                                      std::size_t degree, double dt, double tfinal, const RunOptions& options,
                                      const std::function<void(const StepView<CGField>&)>& observer = {});
} // namespace structfilt

#endif
