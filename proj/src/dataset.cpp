#include "cropspec/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "cropspec/errors.hpp"
#include "cropspec/rng.hpp"
#include "cropspec/util.hpp"

namespace cropspec {

namespace {

// One delimiter-separated line with optional RFC4180-style quoting. Embedded
// newlines inside quotes are not supported.
std::vector<std::string> parse_delimited_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      in_quotes = true;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field, char delim) {
  if (field.find(delim) == std::string::npos && field.find('"') == std::string::npos &&
      field.find('\n') == std::string::npos)
    return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void strip_bom(std::string& s) {
  if (s.size() >= 3 && s[0] == '\xEF' && s[1] == '\xBB' && s[2] == '\xBF') s.erase(0, 3);
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

// Resolves a column reference ("name" or "#index") against the header.
// Returns -1 for an empty reference.
int resolve_column(const std::vector<std::string>& header, const std::string& ref,
                   const std::string& what) {
  if (ref.empty()) return -1;
  if (ref.size() > 1 && ref.front() == '#') {
    const auto idx = parse_long(ref.substr(1));
    if (!idx || *idx < 0 || *idx >= static_cast<long>(header.size()))
      throw DataError("column index '" + ref + "' for " + what + " is out of range (file has " +
                      std::to_string(header.size()) + " columns)");
    return static_cast<int>(*idx);
  }
  const std::string want = to_lower(trim(ref));
  for (std::size_t i = 0; i < header.size(); ++i)
    if (to_lower(trim(header[i])) == want) return static_cast<int>(i);
  throw DataError("header is missing the " + what + " column '" + ref + "'");
}

}  // namespace

void validate(const IngestConfig& config) {
  for (CropLabel c : all_crops()) {
    bool reachable = false;
    for (const auto& [raw, mapped] : config.crop_map) reachable |= (mapped == c);
    if (!reachable)
      throw UsageError("ingest config: crop '" + std::string(to_string(c)) +
                       "' has no canonicalization entry");
  }
  for (StageLabel s : all_stages()) {
    bool reachable = false;
    for (const auto& [raw, mapped] : config.stage_map) reachable |= (mapped == s);
    if (!reachable)
      throw UsageError("ingest config: stage '" + std::string(to_string(s)) +
                       "' has no canonicalization entry");
  }
  if (config.band_mode == BandMode::IndexRange &&
      (config.band_begin < 0 || config.band_end <= config.band_begin))
    throw UsageError("ingest config: index_range mode needs 0 <= band_begin < band_end");
  if (!(config.reflectance_scale > 0.0))
    throw UsageError("ingest config: reflectance_scale must be positive");
}

IngestConfig canonical_ingest_config() {
  IngestConfig c;
  for (CropLabel crop : all_crops()) c.crop_map[to_lower(to_string(crop))] = crop;
  for (StageLabel stage : all_stages()) c.stage_map[to_lower(to_string(stage))] = stage;
  return c;
}

IngestConfig parse_ingest_config(const std::string& text) {
  IngestConfig c = canonical_ingest_config();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("ingest config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "delimiter") {
      if (value == "tab")
        c.delimiter = '\t';
      else if (value.size() == 1)
        c.delimiter = value[0];
      else
        throw UsageError("ingest config: delimiter must be a single character or 'tab'");
    } else if (key == "crop_column") {
      c.crop_column = value;
    } else if (key == "stage_column") {
      c.stage_column = value;
    } else if (key == "lat_column") {
      c.lat_column = value;
    } else if (key == "lon_column") {
      c.lon_column = value;
    } else if (key == "aez_column") {
      c.aez_column = value;
    } else if (key == "source_column") {
      c.source_column = value;
    } else if (key == "band_mode") {
      if (value == "numeric_header")
        c.band_mode = BandMode::NumericHeader;
      else if (value == "index_range")
        c.band_mode = BandMode::IndexRange;
      else
        throw UsageError("ingest config: band_mode must be numeric_header or index_range");
    } else if (key == "band_begin") {
      const auto v = parse_long(value);
      if (!v) throw UsageError("ingest config: band_begin must be an integer");
      c.band_begin = static_cast<int>(*v);
    } else if (key == "band_end") {
      const auto v = parse_long(value);
      if (!v) throw UsageError("ingest config: band_end must be an integer");
      c.band_end = static_cast<int>(*v);
    } else if (key == "reflectance_scale") {
      const auto v = parse_double(value);
      if (!v || !(*v > 0.0)) throw UsageError("ingest config: reflectance_scale must be positive");
      c.reflectance_scale = *v;
    } else if (key.starts_with("crop_map.")) {
      const auto crop = crop_from_string(value);
      if (!crop) throw UsageError("ingest config: unknown crop '" + value + "'");
      c.crop_map[to_lower(trim(key.substr(9)))] = *crop;
    } else if (key.starts_with("stage_map.")) {
      const auto stage = stage_from_string(value);
      if (!stage) throw UsageError("ingest config: unknown stage '" + value + "'");
      c.stage_map[to_lower(trim(key.substr(10)))] = *stage;
    } else {
      throw UsageError("ingest config line " + std::to_string(line_no) + ": unknown key '" + key +
                       "'");
    }
  }
  validate(c);
  return c;
}

IngestConfig load_ingest_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ingest config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ingest_config(buf.str());
}

IngestConfig ghisaconus_ingest_config() {
  // Mirrors profiles/ghisaconus.cfg. Raw strings cover the library's published
  // stage abbreviations and their long forms; confirm the column names against
  // the actual export before a production run.
  static const char* kProfile = R"(
delimiter = ,
crop_column = crop
stage_column = stage
lat_column = latitude
lon_column = longitude
aez_column = aez
source_column = source_id
band_mode = numeric_header
reflectance_scale = 1

crop_map.corn = Corn
crop_map.maize = Corn
crop_map.cotton = Cotton
crop_map.rice = Rice
crop_map.soybeans = Soybeans
crop_map.soybean = Soybeans
crop_map.soybn = Soybeans
crop_map.winter wheat = WinterWheat
crop_map.winter_wheat = WinterWheat
crop_map.wheat = WinterWheat

stage_map.emerge vearly = EmergeVEarly
stage_map.emerge_vearly = EmergeVEarly
stage_map.emg_ve = EmergeVEarly
stage_map.emergence/very early vegetative = EmergeVEarly
stage_map.early mid = EarlyMid
stage_map.early_mid = EarlyMid
stage_map.erl_mid = EarlyMid
stage_map.early and mid vegetative = EarlyMid
stage_map.early/mid vegetative = EarlyMid
stage_map.late = Late
stage_map.late vegetative = Late
stage_map.critical = Critical
stage_map.mature senesc = MatureSenesc
stage_map.mature_senesc = MatureSenesc
stage_map.mat_sen = MatureSenesc
stage_map.maturing/senescence = MatureSenesc
stage_map.maturing/senescing = MatureSenesc
stage_map.harvest = Harvest
stage_map.harvestable = Harvest
)";
  return parse_ingest_config(kProfile);
}

Dataset load_library(const std::filesystem::path& path, const IngestConfig& config) {
  validate(config);
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset file '" + path.string() + "' is empty");
  strip_bom(line);
  strip_cr(line);
  const std::vector<std::string> header = parse_delimited_line(line, config.delimiter);

  const int crop_col = resolve_column(header, config.crop_column, "crop label");
  if (crop_col < 0) throw DataError("ingest config does not map a crop column");
  const int stage_col = resolve_column(header, config.stage_column, "stage label");
  if (stage_col < 0) throw DataError("ingest config does not map a stage column");
  const int lat_col = resolve_column(header, config.lat_column, "latitude");
  const int lon_col = resolve_column(header, config.lon_column, "longitude");
  const int aez_col = resolve_column(header, config.aez_column, "aez");
  const int source_col = resolve_column(header, config.source_column, "source id");

  // Identify band columns.
  std::vector<int> band_cols;
  std::vector<double> wavelengths;
  const auto is_metadata = [&](int i) {
    return i == crop_col || i == stage_col || i == lat_col || i == lon_col || i == aez_col ||
           i == source_col;
  };
  if (config.band_mode == BandMode::NumericHeader) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (is_metadata(static_cast<int>(i))) continue;
      if (const auto w = parse_double(header[i])) {
        band_cols.push_back(static_cast<int>(i));
        wavelengths.push_back(*w);
      }
    }
    if (band_cols.size() < 2)
      throw DataError("found " + std::to_string(band_cols.size()) +
                      " numeric band columns in the header; need at least 2");
  } else {
    if (config.band_end > static_cast<int>(header.size()))
      throw DataError("band_end " + std::to_string(config.band_end) + " exceeds the " +
                      std::to_string(header.size()) + " columns in the header");
    bool all_numeric = true;
    for (int i = config.band_begin; i < config.band_end; ++i) {
      band_cols.push_back(i);
      const auto w = parse_double(header[static_cast<std::size_t>(i)]);
      all_numeric &= w.has_value();
      wavelengths.push_back(w.value_or(0.0));
    }
    if (!all_numeric)
      for (std::size_t i = 0; i < wavelengths.size(); ++i) wavelengths[i] = static_cast<double>(i);
  }

  Dataset ds;
  ds.grid.wavelengths_nm = std::move(wavelengths);
  validate(ds.grid);

  long row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = parse_delimited_line(line, config.delimiter);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(header.size()));

    SampleRecord rec;
    const std::string crop_raw(trim(fields[static_cast<std::size_t>(crop_col)]));
    const auto crop_it = config.crop_map.find(to_lower(crop_raw));
    if (crop_it == config.crop_map.end())
      throw DataError("row " + std::to_string(row) + ": crop label '" + crop_raw +
                      "' has no canonicalization entry");
    rec.crop = crop_it->second;

    const std::string stage_raw(trim(fields[static_cast<std::size_t>(stage_col)]));
    const auto stage_it = config.stage_map.find(to_lower(stage_raw));
    if (stage_it == config.stage_map.end())
      throw DataError("row " + std::to_string(row) + ": stage label '" + stage_raw +
                      "' has no canonicalization entry");
    rec.stage = stage_it->second;

    if (lat_col >= 0 && lon_col >= 0) {
      const auto lat = parse_double(fields[static_cast<std::size_t>(lat_col)]);
      const auto lon = parse_double(fields[static_cast<std::size_t>(lon_col)]);
      if (lat && lon && *lat >= -90.0 && *lat <= 90.0 && *lon >= -180.0 && *lon <= 180.0)
        rec.location = GeoPoint{*lat, *lon};
      // otherwise keep the spectrum and mark the location absent
    }
    if (aez_col >= 0) rec.aez = std::string(trim(fields[static_cast<std::size_t>(aez_col)]));
    if (source_col >= 0)
      rec.source_id = std::string(trim(fields[static_cast<std::size_t>(source_col)]));

    rec.reflectance.resize(static_cast<long>(band_cols.size()));
    for (std::size_t b = 0; b < band_cols.size(); ++b) {
      const std::string& cell = fields[static_cast<std::size_t>(band_cols[b])];
      const auto v = parse_double(cell);
      if (!v || !std::isfinite(*v))
        throw DataError("row " + std::to_string(row) + ", band column '" +
                        header[static_cast<std::size_t>(band_cols[b])] + "': cell '" + cell +
                        "' is not numeric");
      rec.reflectance[static_cast<long>(b)] = *v * config.reflectance_scale;
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw DataError("dataset file '" + path.string() + "' has no data rows");
  validate(ds);
  return ds;
}

SummaryInfo summarize(const Dataset& ds) {
  SummaryInfo info;
  info.records = ds.size();
  info.bands = ds.bands();
  info.wavelength_min = ds.grid.wavelengths_nm.front();
  info.wavelength_max = ds.grid.wavelengths_nm.back();
  info.reflectance_min = std::numeric_limits<double>::infinity();
  info.reflectance_max = -std::numeric_limits<double>::infinity();
  for (const SampleRecord& rec : ds.records) {
    info.per_crop[static_cast<std::size_t>(rec.crop)]++;
    info.per_stage[static_cast<std::size_t>(rec.stage)]++;
    info.per_joint[static_cast<std::size_t>(rec.crop)][static_cast<std::size_t>(rec.stage)]++;
    info.reflectance_min = std::min(info.reflectance_min, rec.reflectance.minCoeff());
    info.reflectance_max = std::max(info.reflectance_max, rec.reflectance.maxCoeff());
    info.out_of_range_values +=
        (rec.reflectance.array() < 0.0 || rec.reflectance.array() > 100.0).count();
  }
  return info;
}

std::string render_summary(const SummaryInfo& info) {
  std::ostringstream out;
  out << "records: " << info.records << "\n";
  out << "bands: " << info.bands << " (" << format_double(info.wavelength_min) << " nm to "
      << format_double(info.wavelength_max) << " nm)\n";
  out << "reflectance range: [" << format_double(info.reflectance_min) << ", "
      << format_double(info.reflectance_max) << "], values outside [0, 100]: "
      << info.out_of_range_values << "\n";
  out << "crops:";
  for (CropLabel c : all_crops())
    out << " " << to_string(c) << "=" << info.per_crop[static_cast<std::size_t>(c)];
  out << "\nstages:";
  for (StageLabel s : all_stages())
    out << " " << to_string(s) << "=" << info.per_stage[static_cast<std::size_t>(s)];
  out << "\njoint counts (crop x stage):\n";
  for (CropLabel c : all_crops()) {
    out << "  " << to_string(c) << ":";
    for (StageLabel s : all_stages())
      out << " " << to_string(s) << "="
          << info.per_joint[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
    out << "\n";
  }
  return out.str();
}

void write_library(const Dataset& ds, const std::filesystem::path& path, char delimiter) {
  validate(ds);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file '" + path.string() + "'");
  out << "crop" << delimiter << "stage" << delimiter << "latitude" << delimiter << "longitude"
      << delimiter << "aez" << delimiter << "source_id";
  for (double w : ds.grid.wavelengths_nm) out << delimiter << format_double(w);
  out << "\n";
  for (const SampleRecord& rec : ds.records) {
    out << to_string(rec.crop) << delimiter << to_string(rec.stage) << delimiter;
    if (rec.location) out << format_double(rec.location->latitude);
    out << delimiter;
    if (rec.location) out << format_double(rec.location->longitude);
    out << delimiter << csv_escape(rec.aez, delimiter) << delimiter
        << csv_escape(rec.source_id, delimiter);
    for (long b = 0; b < rec.reflectance.size(); ++b)
      out << delimiter << format_double(rec.reflectance[b]);
    out << "\n";
  }
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

Dataset synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec.grid);
  if (spec.classes.empty()) throw DataError("synthetic spec lists no classes");
  const int bands = spec.grid.bands();

  Dataset ds;
  ds.grid = spec.grid;
  Rng rng(seed);
  for (const SyntheticClassSpec& cls : spec.classes) {
    if (cls.count < 1) throw DataError("synthetic class " + to_string(JointLabel{cls.crop, cls.stage}) +
                                       " has a non-positive sample count");
    if (cls.mean.size() != bands || cls.covariance.rows() != bands || cls.covariance.cols() != bands)
      throw DataError("synthetic class " + to_string(JointLabel{cls.crop, cls.stage}) +
                      " does not conform to the " + std::to_string(bands) + "-band grid");

    // Sampling factor from the eigendecomposition; tolerates semi-definite
    // covariances (a zero matrix yields constant samples).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cls.covariance);
    if (eig.info() != Eigen::Success)
      throw DataError("eigendecomposition failed for synthetic class " +
                      to_string(JointLabel{cls.crop, cls.stage}));
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double tol = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
    if ((vals.array() < -tol).any())
      throw DataError("covariance for synthetic class " + to_string(JointLabel{cls.crop, cls.stage}) +
                      " is not positive semi-definite");
    const Eigen::MatrixXd sampler =
        eig.eigenvectors() * vals.cwiseMax(0.0).cwiseSqrt().asDiagonal();

    for (long i = 0; i < cls.count; ++i) {
      Eigen::VectorXd z(bands);
      for (int b = 0; b < bands; ++b) z[b] = rng.normal();
      SampleRecord rec;
      rec.reflectance = cls.mean + sampler * z;
      rec.crop = cls.crop;
      rec.stage = cls.stage;
      rec.aez = "synthetic";
      ds.records.push_back(std::move(rec));
    }
  }
  validate(ds);
  return ds;
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synthetic spec is not valid JSON: ") + e.what());
  }
  try {
    SyntheticSpec spec;
    spec.grid.wavelengths_nm = j.at("wavelengths").get<std::vector<double>>();
    const int bands = spec.grid.bands();
    for (const auto& cj : j.at("classes")) {
      SyntheticClassSpec cls;
      const std::string crop_s = cj.at("crop").get<std::string>();
      const auto crop = crop_from_string(crop_s);
      if (!crop) throw DataError("synthetic spec: unknown crop '" + crop_s + "'");
      cls.crop = *crop;
      const std::string stage_s = cj.at("stage").get<std::string>();
      const auto stage = stage_from_string(stage_s);
      if (!stage) throw DataError("synthetic spec: unknown stage '" + stage_s + "'");
      cls.stage = *stage;
      cls.count = cj.at("count").get<long>();
      const auto mean = cj.at("mean").get<std::vector<double>>();
      cls.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<long>(mean.size()));
      if (cj.contains("covariance")) {
        const auto rows = cj.at("covariance").get<std::vector<std::vector<double>>>();
        cls.covariance.resize(static_cast<long>(rows.size()), bands);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (static_cast<int>(rows[r].size()) != bands)
            throw DataError("synthetic spec: covariance row has wrong length");
          for (int c = 0; c < bands; ++c) cls.covariance(static_cast<long>(r), c) = rows[r][static_cast<std::size_t>(c)];
        }
      } else if (cj.contains("diagonal")) {
        const auto diag = cj.at("diagonal").get<std::vector<double>>();
        if (static_cast<int>(diag.size()) != bands)
          throw DataError("synthetic spec: diagonal has wrong length");
        cls.covariance = Eigen::MatrixXd::Zero(bands, bands);
        for (int c = 0; c < bands; ++c) cls.covariance(c, c) = diag[static_cast<std::size_t>(c)];
      } else if (cj.contains("variance")) {
        cls.covariance =
            cj.at("variance").get<double>() * Eigen::MatrixXd::Identity(bands, bands);
      } else {
        throw DataError("synthetic spec: class needs 'covariance', 'diagonal', or 'variance'");
      }
      spec.classes.push_back(std::move(cls));
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synthetic spec is malformed: ") + e.what());
  }
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read synthetic spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_synthetic_spec(buf.str());
}

}  // namespace cropspec
