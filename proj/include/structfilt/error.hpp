#ifndef STRUCTFILT_ERROR_HPP
#define STRUCTFILT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace structfilt
{
    /// Base class of every error raised by the library.
    class Error : public std::runtime_error
    {
    public:
        explicit Error(const std::string& what) : std::runtime_error(what) {}
    };

    /// A series is numerically zero, so it has no isolated roots.
    class DegenerateSeries : public Error
    {
    public:
        using Error::Error;
    };

    /// The constraint operator annihilates every basis function at the
    /// requested point, so no hyperplane normal exists there.
    class DegenerateNormal : public Error
    {
    public:
        using Error::Error;
    };

    /// Equality vectors are linearly dependent.
    class RankDeficient : public Error
    {
    public:
        using Error::Error;
    };

    /// The equality constraints pin a value that violates an inequality family.
    class Infeasible : public Error
    {
    public:
        using Error::Error;
    };

    /// Assembled mass matrix is not symmetric positive definite.
    class NotSPD : public Error
    {
    public:
        using Error::Error;
    };

    /// Implicit time-stepping operator could not be factored.
    class SingularOperator : public Error
    {
    public:
        using Error::Error;
    };

    /// Invalid experiment configuration.
    class ConfigError : public Error
    {
    public:
        using Error::Error;
    };
} // namespace structfilt

#endif
