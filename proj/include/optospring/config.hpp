#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "optospring/plant.hpp"
#include "optospring/servo_chain.hpp"
#include "optospring/transfer_function.hpp"

namespace optospring {

inline constexpr const char* kToolName = "optospring";
inline constexpr const char* kToolVersion = "0.1.0";

struct GridSpec {
    double f_min_hz = 100.0;
    double f_max_hz = 1e6;
    int points_per_decade = 200;

    [[nodiscard]] FrequencyGrid build() const { return FrequencyGrid::log_spaced(f_min_hz, f_max_hz, points_per_decade); }
};

struct CalibrationSpec {
    double target_f_os_hz = 75e3;
    /// When set, the cavity linewidth is solved so that Gamma_os hits this value.
    std::optional<double> target_gamma_os_rad_s;
    GfAnchor gf_anchor;
};

struct RunConfig {
    std::vector<MechanicalMode> mechanical;
    CavityParams cavity;
    FeedbackChain chain;
    GridSpec grid;
    std::optional<CalibrationSpec> calibration;
    /// Free-form notes on where each default comes from; echoed untouched.
    nlohmann::json provenance = nlohmann::json::object();

    [[nodiscard]] Plant plant() const { return {mechanical, cavity}; }
    void validate() const;
};

/// Nominal parameters before calibration (t_total, gamma, prop_gain and
/// the AM delay are placeholders).
RunConfig default_template();
/// default_template() after calibrate().
RunConfig default_config();

struct CalibrationDelta {
    std::string field;
    double before = 0.0;
    double after = 0.0;
};

/// Solve t_total, then gamma (if a Gamma_os target is set), then the chain
/// gain and delay. No-op without a calibration section.
RunConfig calibrate(const RunConfig& cfg, std::vector<CalibrationDelta>* deltas = nullptr);

nlohmann::json to_json(const RunConfig& cfg);
/// Fields missing from `j` are taken from default_config(). Unknown keys and
/// type mismatches raise ConfigError naming the field.
RunConfig config_from_json(const nlohmann::json& j);
/// Parse a JSON document; syntax errors are reported with line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace optospring
