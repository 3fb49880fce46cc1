#ifndef MEMES_VARIATION_HPP
#define MEMES_VARIATION_HPP

#include <memes/random.hpp>
#include <memes/types.hpp>

namespace memes {

    /// Iso+line operator parameters (isotropic noise plus noise along the parent-parent line).
    struct IsoLineConfig {
        double iso_sigma = 0.01;
        double line_sigma = 0.1;
        int batch_size = 128;

        void validate() const
        {
            require(iso_sigma > 0.0 && line_sigma > 0.0, "IsoLineConfig: iso_sigma and line_sigma must be > 0");
            require(batch_size >= 1, "IsoLineConfig: batch_size must be >= 1");
        }
    };

    /// child = p1 + iso_sigma * n + line_sigma * u * (p2 - p1), n ~ N(0, I), u ~ N(0, 1),
    /// clipped to `domain` when given.
    inline Genome iso_line_variation(const Genome& parent1, const Genome& parent2, const IsoLineConfig& cfg, StreamRng& rng,
        const BoundedBox* domain = nullptr)
    {
        require(parent1.size() == parent2.size(), "iso_line_variation: parents differ in dimensionality");
        Genome child(parent1.size());
        for (Eigen::Index i = 0; i < child.size(); ++i)
            child[i] = cfg.iso_sigma * rng.normal();
        const double u = rng.normal();
        child += parent1 + (cfg.line_sigma * u) * (parent2 - parent1);
        return domain ? domain->clip(child) : child;
    }

} // namespace memes

#endif
