#include "nhlat/config.hpp"

#include <fstream>
#include <sstream>

namespace nhlat {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t i = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

// complex literals like "-0.35+0.1i", "1.2i", "0.7"
cxd parse_complex(const std::string& key, const std::string& raw) {
    std::string v = trim(raw);
    if (v.empty()) throw ConfigError("config: empty complex for " + key);
    if (v.back() != 'i') return cxd{parse_double(key, v), 0.0};
    v.pop_back();
    // split at the last +/- that is not an exponent sign or leading sign
    std::size_t pos = std::string::npos;
    for (std::size_t i = v.size(); i-- > 1;) {
        if ((v[i] == '+' || v[i] == '-') && v[i - 1] != 'e' && v[i - 1] != 'E') {
            pos = i;
            break;
        }
    }
    if (pos == std::string::npos)
        return cxd{0.0, v.empty() || v == "+" ? 1.0 : v == "-" ? -1.0 : parse_double(key, v)};
    const std::string re = v.substr(0, pos);
    std::string im = v.substr(pos);
    if (im == "+") im = "1";
    if (im == "-") im = "-1";
    return cxd{parse_double(key, re), parse_double(key, im)};
}

std::string get(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

bool has(const KeyValues& kv, const std::string& key) { return kv.count(key) > 0; }

} // namespace

KeyValues parse_ini_text(const std::string& text) {
    KeyValues kv;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: unterminated section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(lineno));
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

KeyValues load_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open file: " + path.string());
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_ini_text(buf.str());
}

void apply_override(KeyValues& kv, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: '" + assignment + "'");
    kv[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

RunConfig resolve_config(const KeyValues& kv) {
    RunConfig rc;
    EvolutionConfig& evo = rc.ensemble.base;

    // model
    {
        const std::string hops = get(kv, "model.hops", "1:0.7, -1:1, 2:0.8, -2:1");
        HoppingModel model;
        for (const std::string& item : split(hops, ',')) {
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError("config: hop entries look like d:amplitude, got '" + item + "'");
            const int d = parse_int("model.hops", trim(item.substr(0, colon)));
            model.hops[d] = parse_complex("model.hops", trim(item.substr(colon + 1)));
        }
        model.validate();
        evo.model = model;
    }
    evo.L = parse_int("model.L", get(kv, "model.L", "100"));
    evo.onsite_loss = parse_double("model.onsite_loss", get(kv, "model.onsite_loss", "0"));
    {
        const std::string bc = get(kv, "model.bc", "obc");
        if (bc == "obc")
            evo.bc = BoundaryCondition::OBC;
        else if (bc == "pbc")
            evo.bc = BoundaryCondition::PBC;
        else
            throw ConfigError("config: model.bc must be obc or pbc");
    }

    // scattering
    if (parse_bool("scattering.enabled", get(kv, "scattering.enabled", "false"))) {
        ScatteringWindow w;
        w.gamma = parse_double("scattering.gamma", get(kv, "scattering.gamma", "10"));
        w.extent = parse_int("scattering.extent", get(kv, "scattering.extent", "10"));
        w.first_site = parse_int("scattering.first_site", get(kv, "scattering.first_site", "1"));
        w.t_on = parse_double("scattering.t_on", get(kv, "scattering.t_on", "2"));
        w.t_off = parse_double("scattering.t_off", get(kv, "scattering.t_off", "4"));
        evo.scat = w;
    }

    // noise
    {
        const std::string kind = get(kv, "noise.kind", "none");
        if (kind == "ou") {
            OUParams p;
            p.theta = parse_double("noise.theta", get(kv, "noise.theta", "1"));
            p.sigma = parse_double("noise.sigma", get(kv, "noise.sigma", "0.1"));
            evo.noise = p;
        } else if (kind == "white") {
            WhiteNoiseParams p;
            p.gamma_w = parse_double("noise.gamma_w", get(kv, "noise.gamma_w", "4"));
            evo.noise = p;
        } else if (kind == "none") {
            evo.noise = std::monostate{};
        } else {
            throw ConfigError("config: noise.kind must be ou, white or none");
        }
    }

    // evolution
    evo.dt = parse_double("evolution.dt", get(kv, "evolution.dt", "0.1"));
    evo.t_max = parse_double("evolution.t_max", get(kv, "evolution.t_max", "100"));
    evo.sample_stride = parse_int("evolution.sample_stride", get(kv, "evolution.sample_stride", "1"));
    {
        const std::string integ = get(kv, "evolution.integrator", "strang");
        if (integ == "strang")
            evo.integrator = Integrator::Strang;
        else if (integ == "expm")
            evo.integrator = Integrator::Expm;
        else if (integ == "rk4")
            evo.integrator = Integrator::Rk4;
        else
            throw ConfigError("config: evolution.integrator must be strang, expm or rk4");
    }
    {
        const std::string init = get(kv, "evolution.init", "eigenstate");
        if (init == "eigenstate") {
            evo.init.kind = InitState::Kind::EigenstateNearest;
            evo.init.e_target =
                parse_complex("evolution.e_target", get(kv, "evolution.e_target", "-0.35+0.1i"));
        } else if (init == "delta") {
            evo.init.kind = InitState::Kind::DeltaSite;
            evo.init.site = parse_int("evolution.site", get(kv, "evolution.site", "1"));
        } else if (init == "gaussian") {
            evo.init.kind = InitState::Kind::GaussianPacket;
            evo.init.center = parse_double("evolution.center", get(kv, "evolution.center", "50"));
            evo.init.width = parse_double("evolution.width", get(kv, "evolution.width", "5"));
        } else {
            throw ConfigError("config: evolution.init must be eigenstate, delta or gaussian");
        }
    }
    for (const std::string& item : split(get(kv, "evolution.density_times", ""), ','))
        if (!item.empty()) evo.density_times.push_back(parse_double("evolution.density_times", item));

    // ensemble
    rc.ensemble.n_realizations =
        parse_int("ensemble.n_realizations", get(kv, "ensemble.n_realizations", "1"));
    rc.ensemble.master_seed = parse_u64("ensemble.master_seed", get(kv, "ensemble.master_seed", "20240501"));
    {
        const std::string red = get(kv, "ensemble.reduction", "deterministic");
        if (red == "deterministic")
            rc.ensemble.reduction = Reduction::Deterministic;
        else if (red == "fast")
            rc.ensemble.reduction = Reduction::Fast;
        else
            throw ConfigError("config: ensemble.reduction must be deterministic or fast");
    }
    rc.ensemble.workers = parse_int("ensemble.workers", get(kv, "ensemble.workers", "0"));
    rc.ensemble.pair = evo.scat.has_value();
    if (has(kv, "ensemble.pair")) rc.ensemble.pair = parse_bool("ensemble.pair", kv.at("ensemble.pair"));
    for (const std::string& item : split(get(kv, "ensemble.track_modes", ""), ','))
        if (!item.empty()) rc.ensemble.track_modes.push_back(parse_int("ensemble.track_modes", item));

    // sweep + output
    rc.sweep_t_snapshot = parse_double("sweep.t_snapshot", get(kv, "sweep.t_snapshot", "60"));
    rc.sweep_stride = parse_int("sweep.stride", get(kv, "sweep.stride", "1"));
    rc.corner_delta = parse_double("sweep.corner_delta", get(kv, "sweep.corner_delta", "10"));
    rc.out_dir = get(kv, "output.dir", "out");
    rc.prefix = get(kv, "output.prefix", "run");
    return rc;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    const EvolutionConfig& evo = ensemble.base;

    nlohmann::json hops = nlohmann::json::array();
    for (const auto& [d, t] : evo.model.hops)
        hops.push_back({{"d", d}, {"re", t.real()}, {"im", t.imag()}});
    j["model"] = {{"hops", hops},
                  {"L", evo.L},
                  {"bc", evo.bc == BoundaryCondition::OBC ? "obc" : "pbc"},
                  {"onsite_loss", evo.onsite_loss}};
    if (evo.scat)
        j["scattering"] = {{"gamma", evo.scat->gamma},
                           {"extent", evo.scat->extent},
                           {"first_site", evo.scat->first_site},
                           {"t_on", evo.scat->t_on},
                           {"t_off", evo.scat->t_off}};
    if (std::holds_alternative<OUParams>(evo.noise)) {
        const auto& p = std::get<OUParams>(evo.noise);
        j["noise"] = {{"kind", "ou"}, {"theta", p.theta}, {"sigma", p.sigma}};
    } else if (std::holds_alternative<WhiteNoiseParams>(evo.noise)) {
        j["noise"] = {{"kind", "white"}, {"gamma_w", std::get<WhiteNoiseParams>(evo.noise).gamma_w}};
    } else {
        j["noise"] = {{"kind", "none"}};
    }
    nlohmann::json init;
    switch (evo.init.kind) {
        case InitState::Kind::EigenstateNearest:
            init = {{"kind", "eigenstate"},
                    {"e_target_re", evo.init.e_target.real()},
                    {"e_target_im", evo.init.e_target.imag()}};
            break;
        case InitState::Kind::DeltaSite:
            init = {{"kind", "delta"}, {"site", evo.init.site}};
            break;
        case InitState::Kind::GaussianPacket:
            init = {{"kind", "gaussian"}, {"center", evo.init.center}, {"width", evo.init.width}};
            break;
    }
    j["evolution"] = {{"dt", evo.dt},
                      {"t_max", evo.t_max},
                      {"sample_stride", evo.sample_stride},
                      {"integrator", evo.integrator == Integrator::Strang  ? "strang"
                                     : evo.integrator == Integrator::Expm ? "expm"
                                                                          : "rk4"},
                      {"init", init},
                      {"density_times", evo.density_times}};
    j["ensemble"] = {{"n_realizations", ensemble.n_realizations},
                     {"master_seed", ensemble.master_seed},
                     {"reduction", ensemble.reduction == Reduction::Deterministic ? "deterministic" : "fast"},
                     {"workers", ensemble.workers},
                     {"pair", ensemble.pair},
                     {"track_modes", ensemble.track_modes}};
    j["sweep"] = {{"t_snapshot", sweep_t_snapshot}, {"stride", sweep_stride}, {"corner_delta", corner_delta}};
    j["output"] = {{"dir", out_dir}, {"prefix", prefix}};
    return j;
}

void apply_noise_level(KeyValues& kv, const std::string& level) {
    if (level == "none") {
        kv["noise.kind"] = "none";
    } else if (level == "weak") {
        kv["noise.kind"] = "ou";
        kv["noise.theta"] = "1";
        kv["noise.sigma"] = "0.1";
    } else if (level == "strong") {
        kv["noise.kind"] = "ou";
        kv["noise.theta"] = "5";
        kv["noise.sigma"] = "10";
        // long-time window used by the strong-noise figure panels
        if (kv.count("evolution.t_max") && parse_double("t", kv["evolution.t_max"]) < 1000.0)
            kv["evolution.t_max"] = "1000";
        if (kv.count("sweep.t_snapshot")) kv["sweep.t_snapshot"] = "1000";
    } else {
        throw ConfigError("noise level must be none, weak or strong");
    }
}

const std::map<std::string, Preset>& presets() {
    static const std::map<std::string, Preset> table = {
        {"fig1", {R"(
# Spectrum-wide self-healing snapshot, main-text model.
[model]
hops = 1:0.7, -1:1, 2:0.8, -2:1
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = none
[evolution]
dt = 0.1
t_max = 60
sample_stride = 10
[ensemble]
n_realizations = 1
master_seed = 20240501
[sweep]
t_snapshot = 60
stride = 1
[output]
prefix = fig1
)",
                  "sweep"}},
        {"fig2", {R"(
# FTLE ensemble for the representative eigenstate E_init = -0.35+0.1i.
[model]
hops = 1:0.7, -1:1, 2:0.8, -2:1
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = ou
theta = 5
sigma = 10
[evolution]
dt = 0.1
t_max = 1000
sample_stride = 10
init = eigenstate
e_target = -0.35+0.1i
[ensemble]
n_realizations = 1000
master_seed = 20240502
[output]
prefix = fig2
)",
                  "ensemble"}},
        {"sm-s4", {R"(
[model]
hops = 1:0.5, -1:1, 2:0.4, -2:0.8
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = ou
theta = 5
sigma = 10
[evolution]
dt = 0.1
t_max = 1000
sample_stride = 10
init = eigenstate
e_target = -0.35+0.1i
[ensemble]
n_realizations = 1000
master_seed = 20240504
[sweep]
t_snapshot = 1000
[output]
prefix = sm_s4
)",
                   "ensemble"}},
        {"sm-s5", {R"(
[model]
hops = 1:0.6, -1:1, 2:0.7, -2:0.8
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = ou
theta = 5
sigma = 10
[evolution]
dt = 0.1
t_max = 1000
sample_stride = 10
init = eigenstate
e_target = -0.35+0.1i
[ensemble]
n_realizations = 1000
master_seed = 20240505
[sweep]
t_snapshot = 1000
[output]
prefix = sm_s5
)",
                   "ensemble"}},
        {"sm-s6", {R"(
[model]
hops = 1:0.2, -1:0.5, 2:0.6, -2:1, 3:0.1, -3:0.3
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = ou
theta = 5
sigma = 10
[evolution]
dt = 0.1
t_max = 1000
sample_stride = 10
init = eigenstate
e_target = -0.35+0.1i
[ensemble]
n_realizations = 1000
master_seed = 20240506
[sweep]
t_snapshot = 1000
[output]
prefix = sm_s6
)",
                   "ensemble"}},
        {"sm-s8", {R"(
# Short-time FTLE plateau probe: imaginary hoppings, uniform on-site loss,
# delta start at site 5. Add --noise-sigma 0.01 to watch the plateau collapse.
[model]
hops = 1:-0.8i, -1:1.2i, 2:0.05i, -2:0.35i
L = 100
bc = obc
onsite_loss = 0.35
[noise]
kind = none
[evolution]
dt = 0.05
t_max = 40
sample_stride = 1
init = delta
site = 5
[ensemble]
n_realizations = 1
master_seed = 20240508
pair = false
[output]
prefix = sm_s8
)",
                   "evolve"}},
        {"sm-s10", {R"(
# Bulk self-healing fragility: gaussian packet at the center of a long chain,
# scattering applied to 5 central sites during [0, 2].
[model]
hops = 1:0.7, -1:1, 2:0.8, -2:1
L = 500
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 5
first_site = 248
t_on = 0
t_off = 2
[noise]
kind = ou
theta = 1
sigma = 0.1
[evolution]
dt = 0.1
t_max = 100
sample_stride = 1
init = gaussian
center = 250
width = 5
[ensemble]
n_realizations = 1
master_seed = 20240510
[output]
prefix = sm_s10
)",
                    "evolve"}},
        {"sm-eta-avg", {R"(
# Estimator comparison <eps>, exp{2t(lambda_xi - lambda_phi)}, <eta>.
[model]
hops = 1:0.7, -1:1, 2:0.8, -2:1
L = 100
bc = obc
[scattering]
enabled = true
gamma = 10
extent = 10
t_on = 2
t_off = 4
[noise]
kind = ou
theta = 5
sigma = 10
[evolution]
dt = 0.1
t_max = 1000
sample_stride = 10
init = eigenstate
e_target = -0.35+0.1i
[ensemble]
n_realizations = 1000
master_seed = 20240511
[output]
prefix = sm_eta_avg
)",
                        "ensemble"}},
    };
    return table;
}

} // namespace nhlat
