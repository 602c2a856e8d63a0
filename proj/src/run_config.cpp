#include "parataa/run_config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "parataa/errors.hpp"

namespace parataa {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line_) + ": key '" + key_ + "': " + msg);
    }

    void at(int line, std::string key) {
        line_ = line;
        key_ = std::move(key);
    }

    double real(const std::string& v) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) {
                fail("trailing characters in number '" + v + "'");
            }
            return x;
        } catch (const std::invalid_argument&) {
            fail("expected a number, got '" + v + "'");
        } catch (const std::out_of_range&) {
            fail("number out of range: '" + v + "'");
        }
    }

    long long integer(const std::string& v) const {
        long long x = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
            fail("expected an integer, got '" + v + "'");
        }
        return x;
    }

    int small_int(const std::string& v) const {
        const long long x = integer(v);
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            fail("integer out of range: '" + v + "'");
        }
        return static_cast<int>(x);
    }

    std::uint64_t seed(const std::string& v) const {
        std::uint64_t x = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
            fail("expected an unsigned 64-bit integer, got '" + v + "'");
        }
        return x;
    }

    bool boolean(const std::string& v) const {
        std::string low;
        for (char c : v) {
            low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (low == "true" || low == "yes" || low == "on" || low == "1") {
            return true;
        }
        if (low == "false" || low == "no" || low == "off" || low == "0") {
            return false;
        }
        fail("expected a boolean, got '" + v + "'");
    }

    std::vector<double> reals(const std::string& v) const {
        std::vector<double> out;
        for (const auto& part : split(v, ',')) {
            out.push_back(real(part));
        }
        return out;
    }

    std::vector<int> ints(const std::string& v) const {
        std::vector<int> out;
        for (const auto& part : split(v, ',')) {
            out.push_back(small_int(part));
        }
        return out;
    }

    /// Rows separated by ';', entries by ','.
    std::vector<Vector> rows(const std::string& v) const {
        std::vector<Vector> out;
        for (const auto& row : split(v, ';')) {
            const auto xs = reals(row);
            Vector r(static_cast<Eigen::Index>(xs.size()));
            for (std::size_t i = 0; i < xs.size(); ++i) {
                r[static_cast<Eigen::Index>(i)] = xs[i];
            }
            out.push_back(std::move(r));
        }
        return out;
    }

private:
    std::string source_;
    int line_ = 0;
    std::string key_;
};

void set_mixture(Parser& p, MixtureSpec& m, const std::string& key, const std::string& value, bool& known) {
    known = true;
    if (key == "weights") {
        m.weights = p.reals(value);
    } else if (key == "means") {
        m.means = p.rows(value);
    } else if (key == "components") {
        m.components = p.small_int(value);
    } else if (key == "mean_scale") {
        m.mean_scale = p.real(value);
    } else if (key == "mean_seed") {
        m.mean_seed = p.seed(value);
    } else if (key == "s0_sq") {
        m.s0_sq = p.real(value);
    } else {
        known = false;
    }
}

void check_mixture(const MixtureSpec& m, int dim, const std::string& where) {
    auto fail = [&](const std::string& msg) { throw ConfigError("[" + where + "] " + msg); };
    if (!(m.s0_sq > 0.0)) {
        fail("s0_sq must be positive");
    }
    if (m.means.empty()) {
        if (m.components < 1) {
            fail("components must be at least 1");
        }
        if (!m.weights.empty() && static_cast<int>(m.weights.size()) != m.components) {
            fail("weights count does not match components");
        }
        return;
    }
    if (m.weights.size() != m.means.size()) {
        fail(std::to_string(m.weights.size()) + " weights for " + std::to_string(m.means.size()) + " means");
    }
    for (std::size_t k = 0; k < m.means.size(); ++k) {
        if (m.means[k].size() != dim) {
            fail("mean " + std::to_string(k) + " has dimension " + std::to_string(m.means[k].size()) +
                 ", expected dim=" + std::to_string(dim));
        }
        if (!(m.weights[k] > 0.0)) {
            fail("weight " + std::to_string(k) + " must be positive");
        }
    }
}

} // namespace

RunConfig parse_run_config(std::string_view text, std::string_view source) {
    RunConfig cfg;
    Parser p(source);
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section == "model.cond" && !cfg.cond_model) {
                cfg.cond_model = MixtureSpec{};
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        p.at(line_no, section.empty() ? key : section + "." + key);
        if (value.empty()) {
            p.fail("missing value");
        }
        bool known = true;
        auto& sv = cfg.solver;
        if (section == "schedule") {
            if (key == "steps") {
                cfg.steps = p.small_int(value);
            } else if (key == "beta_start") {
                cfg.beta_start = p.real(value);
            } else if (key == "beta_end") {
                cfg.beta_end = p.real(value);
            } else if (key == "eta") {
                cfg.eta = p.real(value);
            } else {
                known = false;
            }
        } else if (section == "model") {
            if (key == "dim") {
                cfg.dim = p.small_int(value);
            } else if (key == "guidance_scale") {
                cfg.guidance_scale = p.real(value);
            } else {
                set_mixture(p, cfg.model, key, value, known);
            }
        } else if (section == "model.cond") {
            set_mixture(p, *cfg.cond_model, key, value, known);
        } else if (section == "solver") {
            if (key == "variant") {
                try {
                    sv.variant = parse_variant(value);
                } catch (const ConfigError& e) {
                    p.fail(e.what());
                }
            } else if (key == "order") {
                sv.order = p.small_int(value);
            } else if (key == "history") {
                sv.history = p.small_int(value);
            } else if (key == "tau") {
                sv.tau = p.real(value);
            } else if (key == "lambda") {
                sv.lambda = p.real(value);
            } else if (key == "window") {
                sv.window = p.small_int(value);
            } else if (key == "max_iters") {
                sv.max_iters = p.small_int(value);
            } else if (key == "init_steps") {
                sv.init_steps = p.small_int(value);
            } else if (key == "safeguard") {
                sv.safeguard = p.boolean(value);
            } else if (key == "record_residuals") {
                sv.record_residuals = p.boolean(value);
            } else if (key == "require_convergence") {
                cfg.require_convergence = p.boolean(value);
            } else {
                known = false;
            }
        } else if (section == "run") {
            if (key == "seed") {
                cfg.base_seed = p.seed(value);
            } else if (key == "repetitions") {
                cfg.repetitions = p.small_int(value);
            } else if (key == "threads") {
                cfg.threads = p.small_int(value);
            } else if (key == "output_dir") {
                cfg.output_dir = value;
            } else if (key == "write_trajectory") {
                cfg.write_trajectory = p.boolean(value);
            } else if (key == "init_trajectory") {
                cfg.init_trajectory = value;
            } else {
                known = false;
            }
        } else if (section == "compare") {
            if (key == "variants") {
                cfg.compare_variants = split(value, ',');
            } else if (key == "fp_plus_orders") {
                cfg.fp_plus_orders = p.ints(value);
            } else {
                known = false;
            }
        } else if (section == "sweep") {
            if (key == "orders") {
                cfg.sweep_orders = p.ints(value);
            } else if (key == "histories") {
                cfg.sweep_histories = p.ints(value);
            } else {
                known = false;
            }
        } else {
            known = false;
        }
        if (!known) {
            p.fail("unknown key");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path.string());
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (steps < 1) {
        fail("[schedule] steps must be at least 1");
    }
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        fail("[schedule] need 0 < beta_start <= beta_end < 1");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        fail("[schedule] eta must lie in [0, 1]");
    }
    if (dim < 1) {
        fail("[model] dim must be at least 1");
    }
    check_mixture(model, dim, "model");
    if (cond_model) {
        check_mixture(*cond_model, dim, "model.cond");
    }
    if (repetitions < 1) {
        fail("[run] repetitions must be at least 1");
    }
    if (threads < 0) {
        fail("[run] threads must be non-negative");
    }
    try {
        solver.validate(steps, dim);
    } catch (const ConfigError& e) {
        fail(std::string("[solver] ") + e.what());
    }
    for (const auto& v : compare_variants) {
        if (v != "FP+" && v != "fp+") {
            try {
                parse_variant(v);
            } catch (const ConfigError& e) {
                fail(std::string("[compare] ") + e.what());
            }
        }
    }
    auto check_orders = [&](const std::vector<int>& ks, const std::string& where) {
        if (ks.empty()) {
            fail(where + " must not be empty");
        }
        for (int k : ks) {
            if (k < 1 || k > steps) {
                fail(where + " entry " + std::to_string(k) + " outside 1.." + std::to_string(steps));
            }
        }
    };
    check_orders(fp_plus_orders, "[compare] fp_plus_orders");
    // Sweep cells are validated individually when the sweep runs.
    if (sweep_orders.empty()) {
        fail("[sweep] orders must not be empty");
    }
    if (sweep_histories.empty()) {
        fail("[sweep] histories must not be empty");
    }
}

} // namespace parataa
