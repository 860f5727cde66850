#include "optospring/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "optospring/errors.hpp"

namespace optospring {

using nlohmann::json;

RunConfig default_template() {
    RunConfig c;
    c.mechanical = {MechanicalMode{5e-10, 288.0, 8000.0}};
    c.cavity.wavelength_m = 1064e-9;
    c.cavity.p_cav_w = 0.2;
    c.cavity.t_total = 1e-4;
    c.cavity.t_in = 0.25e-4;
    c.cavity.t_out = 0.25e-4;
    c.cavity.gamma_rad_s = 1e6;
    c.cavity.detuning_norm = 0.5;
    c.cavity.length_m = 0.01;
    c.calibration = CalibrationSpec{75e3, kTwoPi * 12e3, GfAnchor{75e3, 0.53, -80.0}};
    c.provenance = {
        {"mechanical[0].mass_kg", "measured: effective mass of about 500 ng"},
        {"mechanical[0].f_m_hz", "measured: natural mechanical frequency 288 Hz"},
        {"mechanical[0].q_factor", "measured: mechanical quality factor 8000"},
        {"cavity.wavelength_m", "derived: Nd:YAG laser line, 1064 nm"},
        {"cavity.p_cav_w", "measured: circulating power 0.2 W"},
        {"cavity.length_m", "measured: 1 cm cavity"},
        {"cavity.detuning_norm", "assumed: 0.5 linewidths, blue of resonance"},
        {"cavity.t_in", "assumed: t_total / 4"},
        {"cavity.t_out", "assumed: t_total / 4"},
        {"cavity.t_total", "calibrated: optical spring frequency 75 kHz"},
        {"cavity.gamma_rad_s", "calibrated: Gamma_os target, see calibration.target_gamma_os_rad_s"},
        {"calibration.target_f_os_hz", "measured: optical spring peak at 75 kHz"},
        {"calibration.target_gamma_os_rad_s",
         "derived: 2 pi x 12 kHz, chosen offline to balance the two phase-margin residuals against the measured "
         "open-loop gain (61/93 kHz crossings, 71/65 deg margins)"},
        {"calibration.gf_anchor", "measured: |G_f| = 0.53 at -80 deg, 75 kHz"},
        {"chain.hpf.corner_hz", "measured: 800 Hz high-pass corner"},
        {"chain.servo.pi_corner_hz", "measured: P-I corner at 100 kHz"},
        {"chain.servo.lf_gain_limit_db", "measured: 20 dB low-frequency gain limit"},
        {"chain.servo.prop_gain", "calibrated: |G_f(75 kHz)| = 0.53"},
        {"chain.am.delay_s", "calibrated: phase of G_f(75 kHz) = -80 deg"},
        {"chain.pd.bandwidth_hz", "assumed: 10 MHz, far above the loop band"},
        {"chain.am.bandwidth_hz", "assumed: 1 MHz, far above the loop band"},
    };
    return c;
}

RunConfig default_config() { return calibrate(default_template()); }

void RunConfig::validate() const {
    plant().validate();
    chain.validate();
    (void)grid.build();
    if (calibration) {
        const auto& cal = *calibration;
        if (!(cal.target_f_os_hz > 0.0)) throw ConfigError("calibration.target_f_os_hz must be > 0");
        if (cal.target_gamma_os_rad_s && !(*cal.target_gamma_os_rad_s > 0.0)) {
            throw ConfigError("calibration.target_gamma_os_rad_s must be > 0");
        }
        if (!(cal.gf_anchor.f_hz > 0.0) || !(cal.gf_anchor.magnitude > 0.0)) {
            throw ConfigError("calibration.gf_anchor needs f_hz > 0 and mag > 0");
        }
    }
}

RunConfig calibrate(const RunConfig& cfg, std::vector<CalibrationDelta>* deltas) {
    cfg.validate();
    if (!cfg.calibration) return cfg;
    const CalibrationSpec& cal = *cfg.calibration;
    RunConfig out = cfg;
    const MechanicalMode& m0 = out.mechanical.front();
    out.cavity = calibrate_t_total(out.cavity, m0, cal.target_f_os_hz);
    if (cal.target_gamma_os_rad_s) out.cavity = calibrate_linewidth(out.cavity, m0, *cal.target_gamma_os_rad_s);
    out.chain = calibrate_chain(out.chain, out.cavity, {cal.gf_anchor});
    if (deltas) {
        *deltas = {
            {"cavity.t_total", cfg.cavity.t_total, out.cavity.t_total},
            {"cavity.t_in", cfg.cavity.t_in, out.cavity.t_in},
            {"cavity.t_out", cfg.cavity.t_out, out.cavity.t_out},
            {"cavity.gamma_rad_s", cfg.cavity.gamma_rad_s, out.cavity.gamma_rad_s},
            {"chain.servo.prop_gain", cfg.chain.servo.prop_gain, out.chain.servo.prop_gain},
            {"chain.am.delay_s", cfg.chain.am.delay_s, out.chain.am.delay_s},
        };
    }
    return out;
}

json to_json(const RunConfig& c) {
    json j;
    j["version"] = 1;
    j["mechanical"] = json::array();
    for (const auto& m : c.mechanical) {
        j["mechanical"].push_back({{"mass_kg", m.mass_kg}, {"f_m_hz", m.f_m_hz}, {"q_factor", m.q_factor}});
    }
    const auto& cv = c.cavity;
    j["cavity"] = {{"wavelength_m", cv.wavelength_m}, {"p_cav_w", cv.p_cav_w},   {"t_total", cv.t_total},
                   {"t_in", cv.t_in},                 {"t_out", cv.t_out},       {"gamma_rad_s", cv.gamma_rad_s},
                   {"detuning_norm", cv.detuning_norm}, {"length_m", cv.length_m}};
    const auto& ch = c.chain;
    j["chain"] = {
        {"pd", {{"responsivity_v_per_w", ch.pd.responsivity_v_per_w}, {"bandwidth_hz", ch.pd.bandwidth_hz}}},
        {"hpf", {{"corner_hz", ch.hpf.corner_hz}, {"order", ch.hpf.order}}},
        {"servo",
         {{"prop_gain", ch.servo.prop_gain},
          {"pi_corner_hz", ch.servo.pi_corner_hz},
          {"lf_gain_limit_db", ch.servo.lf_gain_limit_db}}},
        {"am", {{"gain_w_per_v", ch.am.gain_w_per_v}, {"bandwidth_hz", ch.am.bandwidth_hz}, {"delay_s", ch.am.delay_s}}},
    };
    j["grid"] = {{"f_min_hz", c.grid.f_min_hz}, {"f_max_hz", c.grid.f_max_hz}, {"points_per_decade", c.grid.points_per_decade}};
    if (c.calibration) {
        const auto& cal = *c.calibration;
        j["calibration"] = {
            {"target_f_os_hz", cal.target_f_os_hz},
            {"target_gamma_os_rad_s", cal.target_gamma_os_rad_s ? json(*cal.target_gamma_os_rad_s) : json(nullptr)},
            {"gf_anchor", {{"f_hz", cal.gf_anchor.f_hz}, {"mag", cal.gf_anchor.magnitude}, {"phase_deg", cal.gf_anchor.phase_deg}}},
        };
    } else {
        j["calibration"] = nullptr;
    }
    j["provenance"] = c.provenance;
    return j;
}

namespace {

// Walks a JSON object, reporting the dotted path of any offending field.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    double num(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_number()) fail(child(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(child(key), "expected a finite number");
        return d;
    }

    int integer(const std::string& key) const {
        const json& v = at(key);
        if (!v.is_number_integer()) fail(child(key), "expected an integer");
        return v.get<int>();
    }

    std::optional<double> optional_num(const std::string& key) const {
        if (!j_.contains(key) || j_.at(key).is_null()) return std::nullopt;
        return num(key);
    }

    Reader object(const std::string& key) const { return {at(key), child(key)}; }
    const json& raw(const std::string& key) const { return at(key); }
    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    void allow_only(std::initializer_list<const char*> keys) const {
        for (const auto& [k, _] : j_.items()) {
            bool known = false;
            for (const char* allowed : keys) known = known || k == allowed;
            if (!known) fail(child(k), "unknown field");
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
        throw ConfigError("config field '" + path + "': " + msg);
    }

private:
    const json& at(const std::string& key) const {
        if (!j_.contains(key)) fail(child(key), "missing");
        return j_.at(key);
    }
    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
};

}  // namespace

RunConfig config_from_json(const json& user) {
    if (!user.is_object()) throw ConfigError("config: top level must be a JSON object");
    json merged = to_json(default_config());
    merged.merge_patch(user);

    const Reader top(merged, "");
    top.allow_only({"version", "mechanical", "cavity", "chain", "grid", "calibration", "provenance"});
    if (top.has("version") && top.integer("version") != 1) Reader::fail("version", "unsupported config version");

    RunConfig c;
    const json& modes = top.raw("mechanical");
    if (!modes.is_array() || modes.empty()) Reader::fail("mechanical", "expected a nonempty array of modes");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const Reader m(modes[i], "mechanical[" + std::to_string(i) + "]");
        m.allow_only({"mass_kg", "f_m_hz", "q_factor"});
        c.mechanical.push_back({m.num("mass_kg"), m.num("f_m_hz"), m.num("q_factor")});
    }

    const Reader cav = top.object("cavity");
    cav.allow_only({"wavelength_m", "p_cav_w", "t_total", "t_in", "t_out", "gamma_rad_s", "detuning_norm", "length_m"});
    c.cavity = {cav.num("wavelength_m"), cav.num("p_cav_w"),     cav.num("t_total"),       cav.num("t_in"),
                cav.num("t_out"),        cav.num("gamma_rad_s"), cav.num("detuning_norm"), cav.num("length_m")};

    const Reader chain = top.object("chain");
    chain.allow_only({"pd", "hpf", "servo", "am"});
    const Reader pd = chain.object("pd");
    pd.allow_only({"responsivity_v_per_w", "bandwidth_hz"});
    c.chain.pd = {pd.num("responsivity_v_per_w"), pd.num("bandwidth_hz")};
    const Reader hpf = chain.object("hpf");
    hpf.allow_only({"corner_hz", "order"});
    c.chain.hpf = {hpf.num("corner_hz"), hpf.integer("order")};
    const Reader servo = chain.object("servo");
    servo.allow_only({"prop_gain", "pi_corner_hz", "lf_gain_limit_db"});
    c.chain.servo = {servo.num("prop_gain"), servo.num("pi_corner_hz"), servo.num("lf_gain_limit_db")};
    const Reader am = chain.object("am");
    am.allow_only({"gain_w_per_v", "bandwidth_hz", "delay_s"});
    c.chain.am = {am.num("gain_w_per_v"), am.num("bandwidth_hz"), am.num("delay_s")};

    const Reader grid = top.object("grid");
    grid.allow_only({"f_min_hz", "f_max_hz", "points_per_decade"});
    c.grid = {grid.num("f_min_hz"), grid.num("f_max_hz"), grid.integer("points_per_decade")};

    if (top.has("calibration")) {
        const Reader cal = top.object("calibration");
        cal.allow_only({"target_f_os_hz", "target_gamma_os_rad_s", "gf_anchor"});
        const Reader anchor = cal.object("gf_anchor");
        anchor.allow_only({"f_hz", "mag", "phase_deg"});
        c.calibration = CalibrationSpec{cal.num("target_f_os_hz"), cal.optional_num("target_gamma_os_rad_s"),
                                        GfAnchor{anchor.num("f_hz"), anchor.num("mag"), anchor.num("phase_deg")}};
    }
    if (top.has("provenance")) c.provenance = top.raw("provenance");

    c.validate();
    return c;
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < std::min(e.byte > 0 ? e.byte - 1 : 0, text.size()); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << "config: JSON syntax error at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(os.str());
    }
    return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace optospring
