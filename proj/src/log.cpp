#include "pduu/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace pduu::log {
namespace {

std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;
std::function<void(Level, const std::string&)> g_sink;

const char* prefix(Level l) {
    switch (l) {
        case Level::Debug: return "[debug] ";
        case Level::Info: return "[info] ";
        case Level::Warning: return "[warning] ";
        default: return "";
    }
}

void emit(Level l, const std::string& msg) {
    if (l < g_level.load()) return;
    std::lock_guard lock(g_mutex);
    if (g_sink) {
        g_sink(l, msg);
    } else {
        std::cerr << prefix(l) << msg << '\n';
    }
}

}  // namespace

void set_level(Level l) { g_level.store(l); }
Level level() { return g_level.load(); }

void set_sink(std::function<void(Level, const std::string&)> sink) {
    std::lock_guard lock(g_mutex);
    g_sink = std::move(sink);
}

void debug(const std::string& msg) { emit(Level::Debug, msg); }
void info(const std::string& msg) { emit(Level::Info, msg); }
void warning(const std::string& msg) { emit(Level::Warning, msg); }

}  // namespace pduu::log
