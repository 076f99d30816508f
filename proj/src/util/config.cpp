#include "crdnn/util/config.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/bytes.hpp"
#include "crdnn/util/format.hpp"

#include <charconv>

namespace crdnn::util {

FlatConfig FlatConfig::parse(std::string_view text) {
    FlatConfig c;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        c.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return c;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
    return parse(read_text_file(path));
}

const std::string* FlatConfig::find(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(key);
    return v ? *v : fallback;
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    try {
        return parse_double(*v);
    } catch (const InputError&) {
        throw ConfigError("config key '" + key + "': '" + *v + "' is not a number");
    }
}

std::int64_t FlatConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || end != v->data() + v->size()) {
        throw ConfigError("config key '" + key + "': '" + *v + "' is not an integer");
    }
    return out;
}

std::uint64_t FlatConfig::get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || end != v->data() + v->size()) {
        throw ConfigError("config key '" + key + "': '" + *v + "' is not a non-negative integer");
    }
    return out;
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config key '" + key + "': '" + *v + "' is not a boolean");
}

std::vector<double> FlatConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    const auto* v = find(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (auto part : split(*v, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        try {
            out.push_back(parse_double(part));
        } catch (const InputError&) {
            throw ConfigError("config key '" + key + "': '" + std::string(part) + "' is not a number");
        }
    }
    return out;
}

std::vector<std::string> FlatConfig::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!used_.count(k)) out.push_back(k);
    }
    return out;
}

std::string FlatConfig::dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

} // namespace crdnn::util
