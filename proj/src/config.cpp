#include "acm/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace acm {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError("config: bad value '" + std::string(v) + "' for " + std::string(key));
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean '" + std::string(v) + "' for " + std::string(key));
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <class T>
std::string fmt_int(T v) {
    return std::to_string(v);
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Parse>
auto wrap(const char* name, Parse parse) {
    return [name, parse](RunConfig& c, std::string_view v) {
        try {
            parse(c, v);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + name + ": " + e.what());
        }
    };
}

#define ACM_NUM_KEY(NAME, FIELD, TYPE)                                                           \
    Key {                                                                                        \
        NAME, wrap(NAME, [](RunConfig& c, std::string_view v) { c.FIELD = parse_number<TYPE>(NAME, v); }), \
            [](const RunConfig& c) {                                                             \
                if constexpr (std::is_floating_point_v<TYPE>)                                    \
                    return fmt(c.FIELD);                                                         \
                else                                                                             \
                    return fmt_int(c.FIELD);                                                     \
            }                                                                                    \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        Key{"task.kind", wrap("task.kind", [](RunConfig& c, std::string_view v) { c.task.kind = parse_task_kind(v); }),
            [](const RunConfig& c) { return std::string(to_string(c.task.kind)); }},
        ACM_NUM_KEY("task.image_size", task.image_size, std::size_t),
        ACM_NUM_KEY("task.radius", task.radius, std::size_t),
        ACM_NUM_KEY("task.delta", task.delta, double),
        ACM_NUM_KEY("task.noise", task.noise, double),
        ACM_NUM_KEY("task.train_size", task.train_size, std::size_t),
        ACM_NUM_KEY("task.val_size", task.val_size, std::size_t),
        ACM_NUM_KEY("task.test_size", task.test_size, std::size_t),
        ACM_NUM_KEY("task.seed", task.seed, std::uint64_t),
        ACM_NUM_KEY("model.patch_size", model.patch_size, std::size_t),
        Key{"model.widths",
            wrap("model.widths",
                 [](RunConfig& c, std::string_view v) {
                     std::vector<std::size_t> widths;
                     std::size_t start = 0;
                     while (start <= v.size()) {
                         auto end = v.find(',', start);
                         if (end == std::string_view::npos) end = v.size();
                         widths.push_back(parse_number<std::size_t>("model.widths", trim(v.substr(start, end - start))));
                         start = end + 1;
                     }
                     c.model.widths = std::move(widths);
                 }),
            [](const RunConfig& c) {
                std::string s;
                for (std::size_t i = 0; i < c.model.widths.size(); ++i)
                    s += (i ? "," : "") + std::to_string(c.model.widths[i]);
                return s;
            }},
        Key{"model.module", wrap("model.module", [](RunConfig& c, std::string_view v) { c.model.module_kind = parse_module_kind(v); }),
            [](const RunConfig& c) { return std::string(to_string(c.model.module_kind)); }},
        Key{"model.head_pool", wrap("model.head_pool", [](RunConfig& c, std::string_view v) { c.model.head_pool = parse_head_pool(v); }),
            [](const RunConfig& c) { return std::string(to_string(c.model.head_pool)); }},
        Key{"model.coord_channels",
            [](RunConfig& c, std::string_view v) { c.model.coord_channels = parse_bool("model.coord_channels", v); },
            [](const RunConfig& c) { return std::string(c.model.coord_channels ? "true" : "false"); }},
        Key{"model.channel_norm",
            [](RunConfig& c, std::string_view v) { c.model.channel_norm = parse_bool("model.channel_norm", v); },
            [](const RunConfig& c) { return std::string(c.model.channel_norm ? "true" : "false"); }},
        ACM_NUM_KEY("acm.groups", model.acm.groups, std::size_t),
        ACM_NUM_KEY("acm.ratio", model.acm.bottleneck_ratio, std::size_t),
        ACM_NUM_KEY("acm.lambda", train.lambda, double),
        Key{"acm.variant", wrap("acm.variant", [](RunConfig& c, std::string_view v) { c.model.acm.variant = parse_acm_variant(v); }),
            [](const RunConfig& c) { return std::string(to_string(c.model.acm.variant)); }},
        ACM_NUM_KEY("train.lr", train.lr, double),
        ACM_NUM_KEY("train.momentum", train.momentum, double),
        ACM_NUM_KEY("train.weight_decay", train.weight_decay, double),
        ACM_NUM_KEY("train.epochs", train.epochs, int),
        ACM_NUM_KEY("train.lr_drop_epoch", train.lr_drop_epoch, int),
        ACM_NUM_KEY("train.lr_drop_factor", train.lr_drop_factor, double),
        ACM_NUM_KEY("train.batch_size", train.batch_size, std::size_t),
        ACM_NUM_KEY("train.seed", train.seed, std::uint64_t),
    };
    return table;
}

#undef ACM_NUM_KEY

}  // namespace

RunConfig::RunConfig() {
    model.acm.lambda = train.lambda;
    model.image_size = task.image_size;
}

void RunConfig::finalize() {
    model.image_size = task.image_size;
    model.acm.lambda = train.lambda;
    try {
        task.validate();
        model.validate();
        train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig c;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& table = keys();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
        if (it == table.end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        if (!seen.insert(std::string(key)).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
        it->set(c, value);
    }
    c.finalize();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& config) {
    std::string out;
    for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(config) + "\n";
    return out;
}

std::vector<std::string> run_config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.emplace_back(k.name);
    return out;
}

}  // namespace acm
