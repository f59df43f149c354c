#include "chesslm/manifest.hpp"

#include <ctime>

#include "chesslm/util.hpp"
#include "json.hpp"

namespace chesslm {

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config_hashes"] = config_hashes;
    j["dataset_hashes"] = dataset_hashes;
    j["seed"] = seed;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["output_paths"] = output_paths;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
    write_file(path, to_json());
}

std::string file_hash_hex(const std::string& path) {
    return fnv1a64_hex(read_file(path));
}

std::string now_iso8601() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return std::string(buf);
}

}  // namespace chesslm
