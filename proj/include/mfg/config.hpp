#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mfg/beliefs.hpp"
#include "mfg/common_noise.hpp"
#include "mfg/discrete.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/model.hpp"
#include "mfg/temporary.hpp"
#include "mfg/toml.hpp"

namespace mfg {

// One validated run configuration: every section read with defaults applied,
// unknown sections/keys rejected, domain violations reported with the
// offending key spelled as section.key. Empty Eigen vectors mean "not given";
// runners substitute context-dependent defaults (for example theta0 from the
// equilibrium price).

struct GridConfig {
    int n_a = 200;
    double a_max = 50.0;
};

struct StationaryConfig {
    EquilibriumOptions options{};  // z, bracket tolerance, iteration cap
};

struct TransitionConfig {
    int n_steps = 300;
    TransitionOptions options{};
    std::string m0 = "distorted";  // distorted | uniform | point
    double distortion = 0.8;       // mass rescaling toward low wealth for "distorted"
    double m0_wealth = 1.0;        // point-mass coordinates
    double m0_income = 0.5;
};

struct BeliefsConfig {
    PredictorKind predictor = PredictorKind::adaptive_level;
    LearningRule rule{};
    Eigen::VectorXd theta0;  // empty: runner picks the equilibrium level
    PriceBox box{};
};

struct TemporaryConfig {
    int n_steps = 0;  // 0: runner uses the horizon gate minimum
    TemporaryOptions options{};
};

struct CommonNoiseConfig {
    int n_steps = 150;
    double z0 = 0.0;
    int n_z = 5;
    double z_half_width = 0.25;
    int n_p = 7;
    double p_half_width = 0.006;
    PlmSpec::Family family = PlmSpec::Family::level_revert;
    double revert_rate = 0.5;
    double sigma_p = 0.0;
    double theta_distortion = 0.0;  // added to the equilibrium level when theta0 is empty
    Eigen::VectorXd theta0;
    SimulationOptions options{};
};

struct DiscreteConfig {
    bool present = false;  // [discrete] section given
    DiscreteModel model;   // closures assembled from the matrices below
    Eigen::MatrixXd reward_base, reward_price;      // n_x by n_act
    Eigen::VectorXd terminal_base, terminal_price;  // n_x
    double price_intercept = 0.0;
    Eigen::VectorXd price_weights;   // n_x
    Eigen::VectorXd price_z_factor;  // n_z
    Histogram m0;
    int z0 = 0;
    // learning sweep
    int n_steps = 100;
    DiscreteRule rule{};
    Eigen::VectorXd theta0;      // empty: level rules start at the date-0 price
    Eigen::VectorXd price_grid;  // empty: spread around the date-0 price
    double kernel_sd = 0.0;
    double cache_threshold = 0.01;
    // master oracle
    int resolution = 101;
    double target_accuracy = 0.0;
};

struct MrpConfig {
    bool present = false;
    MrpModel model;
    Histogram m0;
    int z0 = 0;
    int resolution = 101;
    int paths = 4000;
};

struct RunConfig {
    ModelParams model;
    GridConfig grid;
    HjbOptions hjb;
    StationaryConfig stationary;
    TransitionConfig transition;
    TemporaryConfig temporary;
    BeliefsConfig beliefs;
    CommonNoiseConfig common_noise;
    DiscreteConfig discrete;
    MrpConfig mrp;
    std::uint64_t seed = 0;
    std::string label = "run";
    int density_every = 50;  // snapshot cadence; 0 writes first and last only

    std::string canonical;  // normalized form of the parsed file
    std::string hash;       // fnv-1a 64 of the canonical form, 16 hex digits
};

RunConfig config_from_table(const toml::Table& table);
RunConfig parse_config(const std::string& path);  // defaults when path is empty

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::string_view bytes);

}  // namespace mfg
