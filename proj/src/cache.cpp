#include "srf/cache.hpp"

#include <fstream>

namespace srf {

FixedPointCache::FixedPointCache(std::filesystem::path file, std::string config_hash)
    : file_(std::move(file)), hash_(std::move(config_hash))
{
    std::ifstream in(file_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || j.value("config_hash", "") != hash_) continue;
        FixedPointState s = state_from_json(j.at("state"));
        entries_[key(s.z, s.rho1, s.rho2)] = std::move(s);
    }
}

std::optional<FixedPointState> FixedPointCache::find(cd z, double rho1, double rho2) const
{
    std::lock_guard lock(mu_);
    const auto it = entries_.find(key(z, rho1, rho2));
    if (it == entries_.end()) return std::nullopt;
    ++hits_;
    return it->second;
}

void FixedPointCache::store(const FixedPointState& s)
{
    std::lock_guard lock(mu_);
    const Key k = key(s.z, s.rho1, s.rho2);
    if (entries_.emplace(k, s).second) pending_.push_back(k);
}

void FixedPointCache::flush()
{
    std::lock_guard lock(mu_);
    if (pending_.empty()) return;
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream out(file_, std::ios::app);
    for (const Key& k : pending_)
        out << nlohmann::json{{"config_hash", hash_}, {"state", state_to_json(entries_.at(k))}}.dump() << '\n';
    pending_.clear();
}

size_t FixedPointCache::size() const
{
    std::lock_guard lock(mu_);
    return entries_.size();
}

} // namespace srf
