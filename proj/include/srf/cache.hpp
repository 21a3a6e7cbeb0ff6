#pragma once

#include "srf/detequiv.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

namespace srf {

// Converged fixed points keyed by (config hash, z, rho), persisted as JSON lines.
class FixedPointCache {
public:
    FixedPointCache(std::filesystem::path file, std::string config_hash);

    std::optional<FixedPointState> find(cd z, double rho1, double rho2) const;
    void store(const FixedPointState& s);
    // Appends entries stored since the last flush.
    void flush();

    size_t size() const;
    size_t hits() const { return hits_; }

private:
    using Key = std::tuple<double, double, double, double>;
    static Key key(cd z, double rho1, double rho2) { return {z.real(), z.imag(), rho1, rho2}; }

    std::filesystem::path file_;
    std::string hash_;
    std::map<Key, FixedPointState> entries_;
    std::vector<Key> pending_;
    mutable size_t hits_ = 0;
    mutable std::mutex mu_;
};

} // namespace srf
