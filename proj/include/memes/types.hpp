#ifndef MEMES_TYPES_HPP
#define MEMES_TYPES_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace memes {

    using Vector = Eigen::VectorXd;
    using Genome = Eigen::VectorXd;

    /// Raised when a caller breaks a documented precondition (dimension mismatch, bad config value).
    class ContractViolation : public std::invalid_argument {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// Raised when an operation needs a non-empty elite archive.
    class EmptyArchiveError : public std::runtime_error {
    public:
        EmptyArchiveError() : std::runtime_error("elite archive is empty: seed it with initial genomes first") {}
    };

    inline void require(bool cond, const std::string& what)
    {
        if (!cond)
            throw ContractViolation(what);
    }

    inline bool all_finite(const Vector& v) { return v.allFinite(); }

    /// Fitness and feature of one genome.
    struct Evaluation {
        double fitness = 0.0;
        Vector feature;

        bool valid() const { return std::isfinite(fitness) && feature.size() > 0 && feature.allFinite(); }
    };

    /// Axis-aligned box, low[i] < high[i] on every axis.
    struct BoundedBox {
        Vector low;
        Vector high;

        BoundedBox() = default;
        BoundedBox(Vector lo, Vector hi) : low(std::move(lo)), high(std::move(hi)) { validate(); }

        static BoundedBox uniform(Eigen::Index dims, double lo, double hi)
        {
            return BoundedBox(Vector::Constant(dims, lo), Vector::Constant(dims, hi));
        }

        Eigen::Index dims() const { return low.size(); }

        void validate() const
        {
            require(low.size() == high.size(), "BoundedBox: low/high dimensionality differ");
            require(low.size() > 0, "BoundedBox: zero dimensionality");
            for (Eigen::Index i = 0; i < low.size(); ++i)
                require(std::isfinite(low[i]) && std::isfinite(high[i]) && low[i] < high[i],
                    "BoundedBox: need low[i] < high[i] on axis " + std::to_string(i));
        }

        Vector clip(const Vector& v) const { return v.cwiseMax(low).cwiseMin(high); }
        Vector center() const { return 0.5 * (low + high); }

        bool operator==(const BoundedBox& o) const
        {
            return low.size() == o.low.size() && low == o.low && high == o.high;
        }
    };

} // namespace memes

#endif
