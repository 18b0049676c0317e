#include <filagauge/log.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace filagauge {

namespace {

LogLevel parse_level() {
    const char* env = std::getenv("FILAGAUGE_LOG_LEVEL");
    if (env == nullptr) {
        return LogLevel::Warn;
    }
    if (std::strcmp(env, "error") == 0) return LogLevel::Error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
}

const char* tag(LogLevel level) {
    switch (level) {
    case LogLevel::Error: return "[ERROR]";
    case LogLevel::Warn: return "[WARN]";
    case LogLevel::Info: return "[INFO]";
    case LogLevel::Debug: return "[DEBUG]";
    }
    return "[?]";
}

} // namespace

LogLevel log_level() {
    static const LogLevel level = parse_level();
    return level;
}

void log_message(LogLevel level, const std::string& message) {
    if (level <= log_level()) {
        std::fprintf(stderr, "%s %s\n", tag(level), message.c_str());
    }
}

} // namespace filagauge
