#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace mfg {

// Flat key = value configuration with one level of [section] grouping.
// '#' starts a comment; keys outside any section land in the "" section.
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const;
    int get_int_or(const std::string& section, const std::string& key, int fallback) const;
};

}  // namespace mfg
