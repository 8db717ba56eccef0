#include "lobliq/scenario.hpp"

#include <set>

#include <json.hpp>

#include "lobliq/io.hpp"

namespace lobliq {

namespace {

using nlohmann::json;

/// Strict view over a JSON object: reads register the key, and `finish()`
/// rejects anything left over, naming it by path.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw SchemaError(path_ + " must be an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key) {
        if (!node_.contains(key)) throw SchemaError("missing key " + sub(key));
        seen_.insert(key);
        return node_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw SchemaError(sub(key) + " must be a number");
        return v.get<double>();
    }
    double number_or(const std::string& key, double fallback) {
        return has(key) ? number(key) : fallback;
    }
    int integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw SchemaError(sub(key) + " must be an integer");
        return v.get<int>();
    }
    int integer_or(const std::string& key, int fallback) {
        return has(key) ? integer(key) : fallback;
    }
    uint64_t u64(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw SchemaError(sub(key) + " must be a non-negative integer");
        if (v.is_number_integer() && v.get<int64_t>() < 0)
            throw SchemaError(sub(key) + " must be a non-negative integer");
        return v.get<uint64_t>();
    }
    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw SchemaError(sub(key) + " must be a string");
        return v.get<std::string>();
    }

    Section object(const std::string& key) { return Section(raw(key), sub(key)); }

    std::string sub(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.count(it.key()))
                throw SchemaError("unknown key " + sub(it.key()));
        }
    }

    const json& node() const { return node_; }
    const std::string& path() const { return path_; }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

MarkDist parse_marks(Section sec) {
    const std::string kind = sec.string("kind");
    MarkDist out = MarkDist::point(0.0);
    if (kind == "uniform") {
        out = MarkDist::uniform(sec.number("a"), sec.number("b"));
    } else if (kind == "point") {
        out = MarkDist::point(sec.number("value"));
    } else if (kind == "discrete") {
        const json& atoms = sec.raw("atoms");
        if (!atoms.is_array() || atoms.empty())
            throw SchemaError(sec.sub("atoms") + " must be a non-empty array of [value, prob]");
        std::vector<std::pair<double, double>> list;
        for (const auto& a : atoms) {
            if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                throw SchemaError(sec.sub("atoms") + " entries must be [value, prob] pairs");
            list.emplace_back(a[0].get<double>(), a[1].get<double>());
        }
        try {
            out = MarkDist::discrete(std::move(list));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(sec.sub("atoms") + ": " + e.what());
        }
    } else {
        throw SchemaError(sec.sub("kind") + " must be one of uniform|point|discrete");
    }
    sec.finish();
    return out;
}

JumpSpec parse_jump(Section sec) {
    JumpSpec out;
    out.intensity = sec.number("intensity");
    out.marks = parse_marks(sec.object("marks"));
    sec.finish();
    return out;
}

ModelSpec parse_model(Section sec) {
    ModelSpec m;
    const std::string family = sec.string("family");
    if (family == "mean_reverting") {
        m.family = ModelFamily::MeanReverting;
        m.kappa_b = sec.number("kappa_b");
        m.kappa_delta = sec.number("kappa_delta");
        m.s_bar = sec.number("s_bar");
        m.delta_bar = sec.number("delta_bar");
    } else if (family == "geometric") {
        m.family = ModelFamily::GeometricLevy;
    } else {
        throw SchemaError(sec.sub("family") + " must be mean_reverting or geometric");
    }
    m.mu_b = sec.number("mu_b");
    m.mu_delta = sec.number("mu_delta");
    m.beta = sec.number("beta");
    m.horizon = sec.number("horizon");
    m.inventory_cap = sec.number("inventory_cap");
    m.control_cap = sec.number("control_cap");
    m.jumps_bid_up = parse_jump(sec.object("jumps_bid_up"));
    m.jumps_bid_down = parse_jump(sec.object("jumps_bid_down"));
    m.jumps_spread_up = parse_jump(sec.object("jumps_spread_up"));
    m.jumps_spread_down = parse_jump(sec.object("jumps_spread_down"));
    m.dark_fill = parse_jump(sec.object("dark_fill"));
    sec.finish();
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(sec.path() + ": " + e.what());
    }
    return m;
}

ObjectiveSpec parse_objective(Section sec) {
    ObjectiveSpec o;
    o.gamma = sec.number("gamma");
    o.alpha = sec.number("alpha");
    o.r = sec.number_or("r", 0.0);
    sec.finish();
    try {
        o.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(sec.path() + ": " + e.what());
    }
    return o;
}

GridSpec parse_grid(Section sec) {
    GridSpec g;
    g.n_t = sec.integer("n_t");
    g.n_x = sec.integer("n_x");
    g.n_s = sec.integer("n_s");
    g.n_d = sec.integer("n_d");
    g.x_max = sec.number("x_max");
    g.s_min = sec.number("s_min");
    g.s_max = sec.number("s_max");
    g.d_max = sec.number_or("d_max", 0.0);
    g.x_first = sec.number_or("x_first", 0.0);
    g.n_nu = sec.integer_or("n_nu", 0);
    g.n_eta = sec.integer_or("n_eta", 9);
    g.time_substeps = sec.integer_or("time_substeps", 0);
    sec.finish();
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(sec.path() + ": " + e.what());
    }
    return g;
}

SimConfig parse_sim(Section sec) {
    SimConfig s;
    s.n_paths = sec.integer_or("n_paths", 1);
    s.dt_max = sec.number_or("dt_max", 0.05);
    s.seed = sec.has("seed") ? sec.u64("seed") : 0;
    s.record_every = sec.number_or("record_every", std::max(0.5, s.dt_max));
    if (sec.has("forced_fill_times")) {
        const json& arr = sec.raw("forced_fill_times");
        if (!arr.is_array()) throw SchemaError(sec.sub("forced_fill_times") + " must be an array");
        for (const auto& v : arr) {
            if (!v.is_number())
                throw SchemaError(sec.sub("forced_fill_times") + " entries must be numbers");
            s.forced_fill_times.push_back(v.get<double>());
        }
    }
    if (sec.has("forced_fill_mode")) {
        const std::string mode = sec.string("forced_fill_mode");
        if (mode == "none") s.forced_fill_mode = ForcedFillMode::None;
        else if (mode == "draw") s.forced_fill_mode = ForcedFillMode::Draw;
        else if (mode == "full") s.forced_fill_mode = ForcedFillMode::Full;
        else throw SchemaError(sec.sub("forced_fill_mode") + " must be none|draw|full");
    }
    sec.finish();
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(sec.path() + ": " + e.what());
    }
    return s;
}

MarketState parse_initial(Section sec) {
    MarketState st;
    st.t = 0.0;
    st.x = sec.number("x");
    st.s_b = sec.number("s_b");
    st.delta = sec.number("delta");
    st.w = sec.number_or("w", 0.0);
    sec.finish();
    try {
        validate_state(st);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(sec.path() + ": " + e.what());
    }
    return st;
}

OutputSpec parse_outputs(Section sec) {
    OutputSpec o;
    o.dir = sec.has("dir") ? sec.string("dir") : o.dir;
    if (sec.has("formats")) {
        const json& arr = sec.raw("formats");
        if (!arr.is_array()) throw SchemaError(sec.sub("formats") + " must be an array");
        o.csv = false;
        o.grid_container = false;
        for (const auto& v : arr) {
            if (!v.is_string())
                throw SchemaError(sec.sub("formats") + " entries must be strings");
            const std::string fmt = v.get<std::string>();
            if (fmt == "csv") o.csv = true;
            else if (fmt == "grid") o.grid_container = true;
            else throw SchemaError(sec.sub("formats") + ": unknown format " + fmt);
        }
    }
    sec.finish();
    return o;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::string& name_hint) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("scenario is not valid JSON: ") + e.what());
    }

    Section root(doc, "");
    const int version = root.integer("schema_version");
    if (version != 1)
        throw SchemaError("schema_version " + std::to_string(version) + " is not supported (expected 1)");

    Scenario sc;
    sc.name = root.has("name") ? root.string("name") : name_hint;
    sc.model = parse_model(root.object("model"));
    if (root.has("objective")) {
        sc.objective = parse_objective(root.object("objective"));
        sc.has_objective = true;
    }
    if (root.has("grid")) {
        sc.grid = parse_grid(root.object("grid"));
        sc.has_grid = true;
        if (sc.grid.x_max > sc.model.inventory_cap + 1e-9)
            throw SchemaError("grid.x_max exceeds model.inventory_cap");
    }
    if (root.has("sim")) {
        sc.sim = parse_sim(root.object("sim"));
        sc.has_sim = true;
    }
    if (root.has("initial_state")) {
        sc.initial = parse_initial(root.object("initial_state"));
        sc.has_initial = true;
        if (sc.initial.x > sc.model.inventory_cap + 1e-9)
            throw SchemaError("initial_state.x exceeds model.inventory_cap");
    }
    if (root.has("outputs")) sc.outputs = parse_outputs(root.object("outputs"));
    root.finish();

    sc.content_hash = hash_hex(fnv1a_hash(json_text));
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::runtime_error& e) {
        throw SchemaError(e.what());
    }
    std::string name = path;
    if (auto pos = name.find_last_of('/'); pos != std::string::npos) name = name.substr(pos + 1);
    if (auto pos = name.find('.'); pos != std::string::npos) name = name.substr(0, pos);
    return parse_scenario(text, name);
}

}  // namespace lobliq
