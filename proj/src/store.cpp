#include "mempredict/store.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <unistd.h>

#include "mempredict/errors.hpp"
#include "mempredict/serialization.hpp"

namespace fs = std::filesystem;

namespace mempredict {

namespace {

constexpr const char* kSnapshotPrefix = "snapshot-";

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw IoError("cannot write " + path.string());
}

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string model_file(Method m) { return "model-" + std::string(method_name(m)) + ".json"; }

std::size_t next_snapshot_number(const fs::path& dir) {
    std::size_t next = 1;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(kSnapshotPrefix, 0) != 0) continue;
        try {
            next = std::max(next, std::stoul(name.substr(std::string(kSnapshotPrefix).size())) + 1);
        } catch (const std::exception&) {
        }
    }
    return next;
}

Json parse_json(const std::string& bytes, const std::string& what) {
    try {
        return Json::parse(bytes);
    } catch (const Json::exception&) {
        throw StoreCorrupt(what + " is not valid JSON");
    }
}

}  // namespace

std::string config_hash(const PipelineConfig& config) { return hex64(fnv1a64(to_json(config).dump())); }

fs::path persist_model_set(const ModelSet& set, const fs::path& store_dir) {
    std::error_code ec;
    fs::create_directories(store_dir, ec);
    if (ec) throw IoError("cannot create " + store_dir.string() + ": " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("encoder.json", to_json(set.encoder).dump() + "\n");
    files.emplace_back("window.json", Json{{"job_ids", set.window_job_ids}}.dump() + "\n");
    Json ranking = Json::array();
    for (const auto& e : set.ranked.entries) {
        files.emplace_back(model_file(e.method), to_json(*e.model).dump() + "\n");
        ranking.push_back({{"method", std::string(method_name(e.method))},
                           {"validation_accuracy", e.validation_accuracy},
                           {"file", model_file(e.method)}});
    }
    Json listing = Json::array();
    for (const auto& [name, bytes] : files)
        listing.push_back({{"name", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    const Json manifest = {{"schema_version", set.schema_version},
                           {"config_hash", config_hash(set.config)},
                           {"config", to_json(set.config)},
                           {"created_at", set.created_at},
                           {"finished_consumed", set.finished_consumed},
                           {"mode_bin", set.mode_bin},
                           {"ranking", ranking},
                           {"files", listing}};
    files.emplace_back("manifest.json", manifest.dump(2) + "\n");

    const std::size_t number = next_snapshot_number(store_dir);
    char name[32];
    std::snprintf(name, sizeof name, "%s%06zu", kSnapshotPrefix, number);
    const fs::path staging = store_dir / (".staging-" + std::string(name) + "-" + std::to_string(::getpid()));
    fs::remove_all(staging, ec);
    fs::create_directory(staging, ec);
    if (ec) throw IoError("cannot create " + staging.string() + ": " + ec.message());
    for (const auto& [file, bytes] : files) write_file(staging / file, bytes);

    const fs::path final_dir = store_dir / name;
    fs::rename(staging, final_dir, ec);
    if (ec) throw IoError("cannot publish " + final_dir.string() + ": " + ec.message());
    const fs::path pointer_tmp = store_dir / (".CURRENT-" + std::to_string(::getpid()));
    write_file(pointer_tmp, std::string(name) + "\n");
    fs::rename(pointer_tmp, store_dir / "CURRENT", ec);
    if (ec) throw IoError("cannot swap CURRENT: " + ec.message());
    return final_dir;
}

ModelSet load_model_set(const fs::path& store_dir) {
    const auto pointer = read_file(store_dir / "CURRENT");
    if (!pointer) throw NotFound("model store at " + store_dir.string());
    std::string name = *pointer;
    while (!name.empty() && (name.back() == '\n' || name.back() == '\r')) name.pop_back();
    if (name.rfind(kSnapshotPrefix, 0) != 0 || name.find('/') != std::string::npos)
        throw StoreCorrupt("CURRENT does not name a snapshot");
    const fs::path dir = store_dir / name;

    const auto manifest_bytes = read_file(dir / "manifest.json");
    if (!manifest_bytes) throw StoreCorrupt("missing manifest in " + name);
    const Json manifest = parse_json(*manifest_bytes, "manifest");

    ModelSet set;
    try {
        set.schema_version = manifest.at("schema_version").get<int>();
    } catch (const Json::exception&) {
        throw StoreCorrupt("manifest lacks a schema version");
    }
    if (set.schema_version != kModelSetSchemaVersion) throw VersionMismatch(set.schema_version, kModelSetSchemaVersion);

    try {
        std::map<std::string, std::string> contents;
        for (const auto& f : manifest.at("files")) {
            const auto file = f.at("name").get<std::string>();
            if (file.find('/') != std::string::npos) throw StoreCorrupt("bad file name " + file);
            const auto bytes = read_file(dir / file);
            if (!bytes) throw StoreCorrupt("missing " + file);
            if (bytes->size() != f.at("bytes").get<std::size_t>()) throw StoreCorrupt(file + " has the wrong size");
            if (hex64(fnv1a64(*bytes)) != f.at("fnv1a64").get<std::string>())
                throw StoreCorrupt(file + " fails its checksum");
            contents[file] = *bytes;
        }
        auto content = [&](const std::string& file) -> const std::string& {
            auto it = contents.find(file);
            if (it == contents.end()) throw StoreCorrupt(file + " is not listed in the manifest");
            return it->second;
        };

        set.config = config_from_json(manifest.at("config"));
        if (config_hash(set.config) != manifest.at("config_hash").get<std::string>())
            throw StoreCorrupt("config hash mismatch");
        set.created_at = manifest.at("created_at").get<std::int64_t>();
        set.finished_consumed = manifest.at("finished_consumed").get<std::size_t>();
        set.mode_bin = manifest.at("mode_bin").get<int>();
        set.encoder = encoder_from_json(parse_json(content("encoder.json"), "encoder.json"));
        set.window_job_ids =
            parse_json(content("window.json"), "window.json").at("job_ids").get<std::vector<std::string>>();

        std::vector<Method> methods;
        std::vector<double> scores;
        for (const auto& r : manifest.at("ranking")) {
            const auto method = parse_method(r.at("method").get<std::string>());
            if (!method) throw StoreCorrupt("unknown method in ranking");
            const auto file = r.at("file").get<std::string>();
            auto model = std::make_shared<const TrainedModel>(model_from_json(parse_json(content(file), file)));
            if (model->spec.method != *method) throw StoreCorrupt(file + " holds a different method");
            if (model->width != set.encoder.width()) throw StoreCorrupt(file + " disagrees with the encoder width");
            if (model->scaling != preferred_scaling(*method)) throw StoreCorrupt(file + " has the wrong scaling");
            const double acc = r.at("validation_accuracy").get<double>();
            methods.push_back(*method);
            scores.push_back(acc);
            set.ranked.entries.push_back({*method, std::move(model), acc});
        }
        if (std::set<Method>(methods.begin(), methods.end()).size() != kAllMethods.size() ||
            methods.size() != kAllMethods.size())
            throw StoreCorrupt("ranking must hold each method exactly once");
        const auto order = ranking_order(methods, scores);
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] != i) throw StoreCorrupt("ranking disagrees with stored accuracies");
        if (set.config.top_n > set.ranked.size()) throw StoreCorrupt("top_n exceeds the stored models");
    } catch (const StoreCorrupt&) {
        throw;
    } catch (const Json::exception& e) {
        throw StoreCorrupt(std::string("malformed store content: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw StoreCorrupt(e.what());
    } catch (const InvalidConfig& e) {
        throw StoreCorrupt(std::string("stored config: ") + e.what());
    }
    return set;
}

}  // namespace mempredict
