#include "tiam/config.hpp"

#include "tiam/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace tiam {
namespace {

using List = std::vector<double>;
using Value = std::variant<double, bool, std::string, List>;

struct Entry {
    Value value;
    std::size_t line = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

bool parse_number(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return !s.empty() && ec == std::errc() && p == s.data() + s.size();
}

// Strips a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && quoted) ++i;
        else if (s[i] == '"') quoted = !quoted;
        else if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

Value parse_value(std::string_view s, std::size_t line) {
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
        std::string out;
        std::size_t i = 1;
        for (; i < s.size() && s[i] != '"'; ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) ++i;
            out += s[i];
        }
        if (i != s.size() - 1) fail(line, "malformed string");
        return out;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated list");
        List out;
        std::string_view body = trim(s.substr(1, s.size() - 2));
        while (!body.empty()) {
            const std::size_t comma = body.find(',');
            const std::string_view item = trim(body.substr(0, comma));
            double v = 0.0;
            if (!parse_number(item, v)) fail(line, "list items must be numbers");
            out.push_back(v);
            if (comma == std::string_view::npos) break;
            body = trim(body.substr(comma + 1));
        }
        return out;
    }
    double v = 0.0;
    if (parse_number(s, v)) return v;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
              c == '/'))
            fail(line, "cannot parse value '" + std::string(s) + "'");
    return std::string(s);
}

std::map<std::string, Entry> tokenize(std::string_view text) {
    static const std::set<std::string> sections{"dataset",      "model", "schedules",
                                                "backtracking", "fista", "run"};
    std::map<std::string, Entry> out;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!sections.count(section)) fail(line_no, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key = value");
        if (section.empty()) fail(line_no, "key outside of a section");
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        if (out.count(key)) fail(line_no, "duplicate key '" + key + "'");
        out[key] = {parse_value(trim(line.substr(eq + 1)), line_no), line_no};
    }
    return out;
}

double as_real(const Entry& e) {
    if (const double* v = std::get_if<double>(&e.value)) return *v;
    fail(e.line, "expected a number");
}

long long as_int(const Entry& e, long long lo) {
    const double v = as_real(e);
    if (std::floor(v) != v || v < static_cast<double>(lo) || v > 9.0e15)
        fail(e.line, "expected an integer >= " + std::to_string(lo));
    return static_cast<long long>(v);
}

bool as_bool(const Entry& e) {
    if (const bool* v = std::get_if<bool>(&e.value)) return *v;
    fail(e.line, "expected true or false");
}

std::string as_string(const Entry& e) {
    if (const std::string* v = std::get_if<std::string>(&e.value)) return *v;
    fail(e.line, "expected a string");
}

std::vector<long long> as_int_list(const Entry& e, long long lo) {
    const List* v = std::get_if<List>(&e.value);
    if (!v) fail(e.line, "expected a list");
    std::vector<long long> out;
    for (double x : *v) {
        if (std::floor(x) != x || x < static_cast<double>(lo) || x > 9.0e15)
            fail(e.line, "list entries must be integers >= " + std::to_string(lo));
        out.push_back(static_cast<long long>(x));
    }
    return out;
}

// Wraps library parse errors so they carry the line number.
template <class F>
auto at_line(const Entry& e, F&& f) {
    try {
        return f();
    } catch (const ConfigError& err) {
        fail(e.line, err.what());
    }
}

using Setter = std::function<void(ExperimentConfig&, const Entry&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        // [dataset]
        t["dataset.source"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "synthetic") c.data.kind = DataSourceKind::Synthetic;
            else if (s == "csv") c.data.kind = DataSourceKind::Csv;
            else fail(e.line, "source must be synthetic or csv");
        };
        t["dataset.path"] = [](ExperimentConfig& c, const Entry& e) { c.data.path = as_string(e); };
        t["dataset.test_path"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.test_path = as_string(e);
        };
        t["dataset.d"] = [](ExperimentConfig& c, const Entry& e) { c.data.d = as_int(e, 1); };
        t["dataset.classes"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.classes = as_int(e, 1);
        };
        t["dataset.per_class"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.per_class = as_int(e, 1);
        };
        t["dataset.separation"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.separation = as_real(e);
        };
        t["dataset.seed"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.synth_seed = as_int(e, 0);
        };
        t["dataset.train_fraction"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.train_fraction = as_real(e);
        };
        t["dataset.split_seed"] = [](ExperimentConfig& c, const Entry& e) {
            c.data.split_seed = as_int(e, 0);
        };
        // [model]
        t["model.hidden"] = [](ExperimentConfig& c, const Entry& e) {
            c.hidden.clear();
            for (long long n : as_int_list(e, 1)) c.hidden.push_back(static_cast<std::size_t>(n));
        };
        t["model.activation"] = [](ExperimentConfig& c, const Entry& e) {
            const ActivationKind k = at_line(e, [&] { return parse_activation_kind(as_string(e)); });
            c.train.spec.activation.kind = k;
        };
        t["model.alpha"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.spec.activation.alpha = as_real(e);
        };
        t["model.regularizer"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "none") c.train.reg.kind = RegularizerKind::None;
            else if (s == "l2") c.train.reg.kind = RegularizerKind::L2;
            else if (s == "l1") c.train.reg.kind = RegularizerKind::L1;
            else fail(e.line, "regularizer must be none, l1 or l2");
        };
        t["model.nu"] = [](ExperimentConfig& c, const Entry& e) { c.train.reg.strength = as_real(e); };
        t["model.init_gain"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.init.gain = as_real(e);
            c.baseline.init.gain = c.train.init.gain;
        };
        // [schedules]
        auto real = [&t](const std::string& key, double ScheduleConfig::*field) {
            t["schedules." + key] = [field](ExperimentConfig& c, const Entry& e) {
                c.train.hyper.*field = as_real(e);
            };
        };
        real("p1_base", &ScheduleConfig::p1_base);
        real("p2_base", &ScheduleConfig::p2_base);
        real("p3_base", &ScheduleConfig::p3_base);
        real("p3_exponent", &ScheduleConfig::p3_exponent);
        real("eps0", &ScheduleConfig::eps0);
        real("eps_floor", &ScheduleConfig::eps_floor);
        real("rho0", &ScheduleConfig::rho0);
        real("rho_growth", &ScheduleConfig::rho_growth);
        real("rho_clip", &ScheduleConfig::rho_clip);
        t["schedules.rho_rule"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "max") c.train.hyper.rho_rule = RhoRule::Max;
            else if (s == "min") c.train.hyper.rho_rule = RhoRule::Min;
            else fail(e.line, "rho_rule must be max or min");
        };
        t["schedules.rho_cost"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "objective") c.train.hyper.rho_cost = RhoCost::Objective;
            else if (s == "loss") c.train.hyper.rho_cost = RhoCost::Loss;
            else fail(e.line, "rho_cost must be objective or loss");
        };
        // [backtracking]
        t["backtracking.init"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.backtrack.init = as_real(e);
        };
        t["backtracking.growth"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.backtrack.growth = as_real(e);
        };
        t["backtracking.max_doublings"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.backtrack.max_doublings = static_cast<int>(as_int(e, 0));
        };
        t["backtracking.warm_start"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.backtrack.warm_start = as_bool(e);
        };
        t["backtracking.points"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "printed") c.train.backtrack.points = ConditionPoints::Printed;
            else if (s == "matched") c.train.backtrack.points = ConditionPoints::Matched;
            else fail(e.line, "points must be printed or matched");
        };
        // [fista]
        t["fista.max_iters"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.fista.max_iters = static_cast<int>(as_int(e, 1));
        };
        t["fista.grad_tol"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.fista.grad_tol = as_real(e);
        };
        t["fista.step"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "fixed") c.train.fista.step = FistaStep::Fixed;
            else if (s == "backtracking") c.train.fista.step = FistaStep::Backtracking;
            else fail(e.line, "step must be fixed or backtracking");
        };
        t["fista.lipschitz"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "per_sample") c.train.fista.lipschitz = LossLipschitz::PerSample;
            else if (s == "conservative") c.train.fista.lipschitz = LossLipschitz::Conservative;
            else fail(e.line, "lipschitz must be per_sample or conservative");
        };
        // [run]
        t["run.epochs"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.epochs = static_cast<int>(as_int(e, 1));
            c.baseline.epochs = c.train.epochs;
        };
        t["run.seeds"] = [](ExperimentConfig& c, const Entry& e) {
            c.seeds.clear();
            for (long long s : as_int_list(e, 0)) c.seeds.push_back(static_cast<std::uint64_t>(s));
        };
        t["run.ablation"] = [](ExperimentConfig& c, const Entry& e) {
            c.train.ablation = at_line(e, [&] { return parse_ablation(as_string(e)); });
        };
        t["run.safeguard"] = [](ExperimentConfig& c, const Entry& e) {
            const std::string s = as_string(e);
            if (s == "per_block") c.train.safeguard = SafeguardMode::PerBlock;
            else if (s == "per_epoch") c.train.safeguard = SafeguardMode::PerEpoch;
            else fail(e.line, "safeguard must be per_block or per_epoch");
        };
        t["run.optimizer"] = [](ExperimentConfig& c, const Entry& e) {
            c.method = at_line(e, [&] { return parse_method(as_string(e)); });
            if (c.method == Method::GD) c.baseline.optimizer = BaselineOptimizer::GD;
            if (c.method == Method::Adam) c.baseline.optimizer = BaselineOptimizer::Adam;
        };
        t["run.lr"] = [](ExperimentConfig& c, const Entry& e) { c.baseline.alpha = as_real(e); };
        t["run.beta1"] = [](ExperimentConfig& c, const Entry& e) { c.baseline.beta1 = as_real(e); };
        t["run.beta2"] = [](ExperimentConfig& c, const Entry& e) { c.baseline.beta2 = as_real(e); };
        t["run.adam_eps"] = [](ExperimentConfig& c, const Entry& e) {
            c.baseline.adam_eps = as_real(e);
        };
        t["run.out"] = [](ExperimentConfig& c, const Entry& e) { c.out_dir = as_string(e); };
        t["run.audit"] = [](ExperimentConfig& c, const Entry& e) { c.train.audit = as_bool(e); };
        return t;
    }();
    return table;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Tiam: return "tiam";
        case Method::GD: return "gd";
        case Method::Adam: return "adam";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "tiam") return Method::Tiam;
    if (name == "gd") return Method::GD;
    if (name == "adam") return Method::Adam;
    throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected tiam, gd or adam)");
}

NetworkSpec ExperimentConfig::network_for(std::size_t input_dim, std::size_t classes) const {
    NetworkSpec spec = train.spec;
    spec.layer_dims.clear();
    spec.layer_dims.push_back(input_dim);
    spec.layer_dims.insert(spec.layer_dims.end(), hidden.begin(), hidden.end());
    spec.layer_dims.push_back(classes);
    return spec;
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (hidden.empty()) throw ConfigError("model.hidden needs at least one layer");
    if (data.kind == DataSourceKind::Csv && data.path.empty())
        throw ConfigError("dataset.path is required for csv sources");
    if (data.kind == DataSourceKind::Synthetic) {
        if (!(data.separation > 0.0)) throw ConfigError("dataset.separation must be > 0");
        if (data.classes > data.d + 1)
            throw ConfigError("dataset.classes must be <= dataset.d + 1");
    }
    if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0))
        throw ConfigError("dataset.train_fraction must lie in (0,1)");
    // Any placeholder widths make the structural checks meaningful.
    TrainConfig t = train;
    t.spec = network_for(2, 2);
    if (method == Method::Tiam) t.validate();
    else {
        t.spec.validate();
        baseline.validate();
    }
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    const auto entries = tokenize(text);
    const auto& table = setters();
    for (const auto& [key, entry] : entries) {
        const auto it = table.find(key);
        if (it == table.end()) fail(entry.line, "unknown key '" + key + "'");
        it->second(cfg, entry);
    }
    cfg.baseline.init = cfg.train.init;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string to_document(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[dataset]\n";
    if (c.data.kind == DataSourceKind::Csv) {
        o << "source = \"csv\"\n";
        o << "path = " << quote(c.data.path.string()) << "\n";
        if (!c.data.test_path.empty()) o << "test_path = " << quote(c.data.test_path.string()) << "\n";
    } else {
        o << "source = \"synthetic\"\n";
        o << "d = " << c.data.d << "\nclasses = " << c.data.classes
          << "\nper_class = " << c.data.per_class << "\nseparation = " << num(c.data.separation)
          << "\nseed = " << c.data.synth_seed << "\n";
    }
    o << "train_fraction = " << num(c.data.train_fraction) << "\n";
    o << "split_seed = " << c.data.split_seed << "\n\n";

    o << "[model]\nhidden = [";
    for (std::size_t i = 0; i < c.hidden.size(); ++i) o << (i ? ", " : "") << c.hidden[i];
    o << "]\n";
    o << "activation = \"" << to_string(c.train.spec.activation.kind) << "\"\n";
    o << "alpha = " << num(c.train.spec.activation.alpha) << "\n";
    const char* reg = c.train.reg.kind == RegularizerKind::L2   ? "l2"
                      : c.train.reg.kind == RegularizerKind::L1 ? "l1"
                                                                : "none";
    o << "regularizer = \"" << reg << "\"\nnu = " << num(c.train.reg.strength) << "\n";
    o << "init_gain = " << num(c.train.init.gain) << "\n\n";

    const ScheduleConfig& s = c.train.hyper;
    o << "[schedules]\n";
    o << "p1_base = " << num(s.p1_base) << "\np2_base = " << num(s.p2_base)
      << "\np3_base = " << num(s.p3_base) << "\np3_exponent = " << num(s.p3_exponent)
      << "\neps0 = " << num(s.eps0) << "\neps_floor = " << num(s.eps_floor)
      << "\nrho0 = " << num(s.rho0) << "\nrho_growth = " << num(s.rho_growth)
      << "\nrho_clip = " << num(s.rho_clip) << "\n";
    o << "rho_rule = \"" << (s.rho_rule == RhoRule::Max ? "max" : "min") << "\"\n";
    o << "rho_cost = \"" << (s.rho_cost == RhoCost::Objective ? "objective" : "loss") << "\"\n\n";

    const BacktrackConfig& b = c.train.backtrack;
    o << "[backtracking]\ninit = " << num(b.init) << "\ngrowth = " << num(b.growth)
      << "\nmax_doublings = " << b.max_doublings
      << "\nwarm_start = " << (b.warm_start ? "true" : "false") << "\npoints = \""
      << (b.points == ConditionPoints::Printed ? "printed" : "matched") << "\"\n\n";

    const FistaConfig& f = c.train.fista;
    o << "[fista]\nmax_iters = " << f.max_iters << "\ngrad_tol = " << num(f.grad_tol)
      << "\nstep = \"" << (f.step == FistaStep::Fixed ? "fixed" : "backtracking")
      << "\"\nlipschitz = \""
      << (f.lipschitz == LossLipschitz::PerSample ? "per_sample" : "conservative") << "\"\n\n";

    o << "[run]\nepochs = " << c.train.epochs << "\nseeds = [";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? ", " : "") << c.seeds[i];
    o << "]\n";
    o << "ablation = \"" << to_string(c.train.ablation) << "\"\n";
    o << "safeguard = \""
      << (c.train.safeguard == SafeguardMode::PerBlock ? "per_block" : "per_epoch") << "\"\n";
    o << "optimizer = \"" << to_string(c.method) << "\"\n";
    o << "lr = " << num(c.baseline.alpha) << "\nbeta1 = " << num(c.baseline.beta1)
      << "\nbeta2 = " << num(c.baseline.beta2) << "\nadam_eps = " << num(c.baseline.adam_eps)
      << "\n";
    o << "out = " << quote(c.out_dir.string()) << "\n";
    o << "audit = " << (c.train.audit ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace tiam
