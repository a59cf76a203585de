#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "lesionkit/config.hpp"
#include "lesionkit/providers.hpp"

namespace lesionkit::service {

/// Immutable analysis state built from one configuration snapshot.
struct Engine {
    config::ServiceConfig config;
    providers::Registry registry;
    std::shared_ptr<const classify::LinearModel> binary_model;
    std::shared_ptr<const classify::LinearModel> multi8_model;

    abcd::AbcdConfig abcd_config(double mm_per_pixel) const;
};

/// Validates the config and registers the built-in providers. Throws on any
/// missing path, unreadable model or unknown pinned provider id.
std::shared_ptr<const Engine> build_engine(const config::ServiceConfig& cfg);

/// 64-bit FNV-1a of the bytes as 16 hex digits.
std::string content_hash(std::span<const std::uint8_t> bytes);

serialize::Json model_info(const Engine& engine);

class Server {
public:
    explicit Server(config::ServiceConfig cfg);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds host:port (port 0 picks a free port) and returns the bound port.
    int bind();
    /// Serves until stop(); call after bind().
    void serve();
    /// bind() + serve() on a background thread; returns the bound port.
    int start();
    void stop();

    /// Rebuilds the engine from the config file it was loaded from and swaps
    /// it in atomically. The previous engine stays live if this throws.
    void reload();

    std::shared_ptr<const Engine> engine() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lesionkit::service
