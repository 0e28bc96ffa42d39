#include "tubeplan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tubeplan/binio.hpp"
#include "tubeplan/errors.hpp"
#include "tubeplan/rng.hpp"

namespace tubeplan::data {

namespace {

constexpr uint32_t kDatasetVersion = 1;
constexpr char kMagicZ[8] = {'T', 'P', 'D', 'A', 'T', '_', 'Z', '\0'};
constexpr char kMagicV[8] = {'T', 'P', 'D', 'A', 'T', '_', 'V', '\0'};
constexpr char kMagicP[8] = {'T', 'P', 'D', 'A', 'T', '_', 'P', '\0'};
constexpr char kMagicIdx[8] = {'T', 'P', 'D', 'A', 'T', 'I', 'D', 'X'};

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void save_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::size_t n = d.records.size();
    std::size_t z_per = static_cast<std::size_t>(d.meta.traj_len + 1) * 2;
    std::size_t v_per = static_cast<std::size_t>(d.meta.traj_len) * 2;

    std::vector<float> z_all, v_all, p_all;
    z_all.reserve(n * z_per);
    v_all.reserve(n * v_per);
    p_all.reserve(n * z_per);
    // index rows: env_id, seed, z offset, v offset, proj offset (elements)
    std::vector<uint64_t> index;
    index.reserve(n * 5);
    for (const auto& r : d.records) {
        if (r.z.size() != z_per || r.v.size() != v_per || r.proj.size() != z_per)
            throw ShapeError("record arrays inconsistent with traj_len");
        index.push_back(r.env_id);
        index.push_back(r.seed);
        index.push_back(z_all.size());
        index.push_back(v_all.size());
        index.push_back(p_all.size());
        z_all.insert(z_all.end(), r.z.begin(), r.z.end());
        v_all.insert(v_all.end(), r.v.begin(), r.v.end());
        p_all.insert(p_all.end(), r.proj.begin(), r.proj.end());
    }

    nlohmann::json meta = {
        {"format", "tubeplan.dataset"},
        {"version", kDatasetVersion},
        {"endianness", "little"},
        {"dtype", "float32"},
        {"dt", d.meta.dt},
        {"v_bar", d.meta.v_bar},
        {"traj_len", d.meta.traj_len},
        {"n_records", n},
        {"z_elements", z_all.size()},
        {"v_elements", v_all.size()},
        {"proj_elements", p_all.size()},
        {"configs", d.meta.configs},
    };
    save_json(meta, dir / "meta.json");
    write_f32_file(dir / "z.f32", kMagicZ, kDatasetVersion, z_all);
    write_f32_file(dir / "v.f32", kMagicV, kDatasetVersion, v_all);
    write_f32_file(dir / "proj.f32", kMagicP, kDatasetVersion, p_all);
    write_u64_file(dir / "index.bin", kMagicIdx, kDatasetVersion, index);
}

Dataset read_dataset(const std::filesystem::path& dir) {
    nlohmann::json meta = load_json(dir / "meta.json");
    if (meta.value("format", "") != std::string("tubeplan.dataset"))
        throw FormatError("not a dataset directory: " + dir.string());
    uint32_t version = meta.value("version", 0u);
    if (version != kDatasetVersion)
        throw VersionError("unsupported dataset version " + std::to_string(version));

    Dataset d;
    d.meta.dt = meta.at("dt").get<double>();
    d.meta.v_bar = meta.at("v_bar").get<double>();
    d.meta.traj_len = meta.at("traj_len").get<int>();
    d.meta.configs = meta.value("configs", nlohmann::json::object());

    auto z_all = read_f32_file(dir / "z.f32", kMagicZ, kDatasetVersion);
    auto v_all = read_f32_file(dir / "v.f32", kMagicV, kDatasetVersion);
    auto p_all = read_f32_file(dir / "proj.f32", kMagicP, kDatasetVersion);
    auto index = read_u64_file(dir / "index.bin", kMagicIdx, kDatasetVersion);

    std::size_t n = meta.at("n_records").get<std::size_t>();
    std::size_t z_per = static_cast<std::size_t>(d.meta.traj_len + 1) * 2;
    std::size_t v_per = static_cast<std::size_t>(d.meta.traj_len) * 2;
    if (index.size() != n * 5) throw ShapeError("index table size disagrees with n_records");
    if (z_all.size() != n * z_per || p_all.size() != n * z_per || v_all.size() != n * v_per)
        throw ShapeError("array payload sizes disagree with recorded shapes");
    if (meta.at("z_elements").get<std::size_t>() != z_all.size() ||
        meta.at("v_elements").get<std::size_t>() != v_all.size() ||
        meta.at("proj_elements").get<std::size_t>() != p_all.size())
        throw ShapeError("meta element counts disagree with payloads");

    d.records.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = d.records[i];
        r.env_id = static_cast<uint32_t>(index[i * 5 + 0]);
        r.seed = index[i * 5 + 1];
        std::size_t zo = index[i * 5 + 2], vo = index[i * 5 + 3], po = index[i * 5 + 4];
        if (zo != i * z_per || vo != i * v_per || po != i * z_per)
            throw ShapeError("index offsets disagree with record shapes");
        r.z.assign(z_all.begin() + zo, z_all.begin() + zo + z_per);
        r.v.assign(v_all.begin() + vo, v_all.begin() + vo + v_per);
        r.proj.assign(p_all.begin() + po, p_all.begin() + po + z_per);
    }
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double holdout_frac, uint64_t seed) {
    if (!(holdout_frac > 0.0 && holdout_frac < 1.0))
        throw ValidationError("holdout_frac must be in (0, 1)");
    std::size_t n = d.records.size();
    if (n < 2) throw ValidationError("need at least 2 records to split");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform() * (i + 1));
        if (j > i) j = i;
        std::swap(order[i], order[j]);
    }
    std::size_t n_hold = static_cast<std::size_t>(std::llround(holdout_frac * n));
    n_hold = std::clamp<std::size_t>(n_hold, 1, n - 1);

    Dataset train{d.meta, {}}, holdout{d.meta, {}};
    std::vector<bool> is_hold(n, false);
    for (std::size_t i = 0; i < n_hold; ++i) is_hold[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i)
        (is_hold[i] ? holdout : train).records.push_back(d.records[i]);
    return {std::move(train), std::move(holdout)};
}

std::vector<double> record_errors(const RolloutRecord& r) {
    std::size_t n = r.z.size() / 2;
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = r.error_at(static_cast<int>(k));
    return e;
}

std::vector<double> pooled_errors(const Dataset& d) {
    std::vector<double> all;
    all.reserve(d.records.size() * (d.meta.traj_len + 1));
    for (const auto& r : d.records) {
        auto e = record_errors(r);
        all.insert(all.end(), e.begin(), e.end());
    }
    return all;
}

double empirical_quantile(std::vector<double> values, double alpha) {
    if (values.empty()) throw ValidationError("quantile of empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(alpha * n));
    if (idx > 0) --idx;
    if (idx >= n) idx = n - 1;
    return values[idx];
}

double error_quantile(const Dataset& d, double alpha) {
    return empirical_quantile(pooled_errors(d), alpha);
}

bool datasets_equal(const Dataset& a, const Dataset& b) {
    if (!(a.meta == b.meta) || a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& ra = a.records[i];
        const auto& rb = b.records[i];
        if (ra.env_id != rb.env_id || ra.seed != rb.seed) return false;
        if (ra.z != rb.z || ra.v != rb.v || ra.proj != rb.proj) return false;
    }
    return true;
}

uint64_t dataset_hash(const std::filesystem::path& dir) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const char* name : {"meta.json", "z.f32", "v.f32", "proj.f32", "index.bin"}) {
        uint64_t fh = fnv1a_file(dir / name);
        h ^= fh;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace tubeplan::data
