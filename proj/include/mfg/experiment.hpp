#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mfg/config.hpp"

namespace mfg {

// Orchestration layer. Dispatches one subcommand, writes every artifact under
// out_dir, and reports the scalar summary. Solver modules never touch the
// filesystem; all persistence happens here. CSV cells carry 17 significant
// digits, so a rerun with the same config and seed is byte-identical.

struct RunArtifacts {
    std::string out_dir;
    std::vector<std::string> files;         // relative to out_dir, creation order
    std::map<std::string, double> summary;  // scalars, mirrored into summary.json
};

// Stable per-stage stream: splitmix64 of seed xor fnv1a64(label). Adding a
// stage with a new label never shifts the draws of existing stages.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view label);

// subcommand: stationary | transition | temporary-eq | common-noise |
// discrete-learn | discrete-master | mrp | suite. Writes manifest.json first
// (marked incomplete), then the subcommand's CSVs, then summary.json and the
// finalized manifest. Errors propagate; whatever was written stays on disk
// with the incomplete marker in place.
RunArtifacts run_experiment(const std::string& subcommand, const RunConfig& cfg,
                            const std::string& out_dir);

}  // namespace mfg
