#pragma once

// Minimal leveled logging to stderr. The threshold comes from the
// CASCADE_LOG environment variable (error, warn, info, debug); default warn.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace bitcascade::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline Level level_from_env() {
    const char* env = std::getenv("CASCADE_LOG");
    if (env == nullptr) return Level::Warn;
    const std::string_view v(env);
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
}

inline Level& threshold() {
    static Level level = level_from_env();
    return level;
}

inline void set_level(Level level) { threshold() = level; }

inline bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

template <class... Args>
void write(Level level, const Args&... args) {
    if (!enabled(level)) return;
    static constexpr std::string_view kTags[] = {"error", "warn", "info", "debug"};
    std::ostringstream line;
    line << '[' << kTags[static_cast<int>(level)] << "] ";
    (line << ... << args);
    line << '\n';
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::cerr << line.str();
}

template <class... Args> void error(const Args&... args) { write(Level::Error, args...); }
template <class... Args> void warn(const Args&... args) { write(Level::Warn, args...); }
template <class... Args> void info(const Args&... args) { write(Level::Info, args...); }
template <class... Args> void debug(const Args&... args) { write(Level::Debug, args...); }

}  // namespace bitcascade::log
