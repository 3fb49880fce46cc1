#ifndef MEMES_REPORT_HPP
#define MEMES_REPORT_HPP

#include <memes/types.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace memes {

    /// Where an offspring came from.
    enum class OffspringSource { exploit, explore, variation };

    inline std::string to_string(OffspringSource s)
    {
        switch (s) {
        case OffspringSource::exploit: return "exploit";
        case OffspringSource::explore: return "explore";
        case OffspringSource::variation: return "variation";
        }
        return "?";
    }

    /// One candidate produced in a generation by an emitter slot (or a GA variation).
    struct OffspringRecord {
        int slot = 0;
        OffspringSource source = OffspringSource::exploit;
        bool added = false;
        bool valid = true;

        // Emitter bookkeeping; unused (-1 / false) for plain variation offspring.
        bool reset = false;
        int completed_lifespan = -1;
        OffspringSource completed_source = OffspringSource::exploit;
        int lifespan = -1;
        int stagnation = -1;

        std::optional<Vector> parent_feature;
        Vector offspring_feature;
        double fitness = 0.0;
        // Filled for emitter offspring only; plain variation records leave it empty.
        Genome genome;
    };

    struct GenerationReport {
        int generation = 0; // 1-based index of the generation just completed
        std::int64_t evaluations_total = 0;
        std::int64_t evaluations = 0; // consumed by this generation
        std::size_t samples_added = 0;
        std::vector<OffspringRecord> offspring;
    };

} // namespace memes

#endif
