#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advmimo {

inline constexpr std::size_t kColumnCount = 12;

// CSV column order. This is the on-disk interface; do not reorder.
enum class Column : std::size_t {
    x_coord = 0,
    y_coord,
    distance,
    pathloss,
    doa_phi,
    doa_theta,
    dod_phi,
    dod_theta,
    phase,
    power,
    time_of_arrival,
    los,
};

inline constexpr std::array<std::string_view, kColumnCount> kColumnNames = {
    "x_coord", "y_coord", "distance", "pathloss", "doa_phi", "doa_theta",
    "dod_phi", "dod_theta", "phase", "power", "time_of_arrival", "los",
};

std::string_view column_name(Column c);
std::optional<Column> column_from_name(std::string_view name);

/// One user's channel observation. Units: meters, dB, degrees, watts, seconds.
/// `pathloss` is the regression target; `los` is 1 (line of sight) or 0.
struct Record {
    double x_coord = 0.0;
    double y_coord = 0.0;
    double distance = 0.0;
    double pathloss = 0.0;
    double doa_phi = 0.0;
    double doa_theta = 0.0;
    double dod_phi = 0.0;
    double dod_theta = 0.0;
    double phase = 0.0;
    double power = 0.0;
    double time_of_arrival = 0.0;
    int los = 0;

    double get(Column c) const;
    void set(Column c, double value);  // `los` is rounded to the nearest integer

    std::array<double, kColumnCount> values() const;

    friend bool operator==(const Record&, const Record&) = default;
};

enum class Provenance { generated, ingested };

struct FeatureStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

/// Immutable, non-empty ordered collection of records with cached per-column
/// statistics.
class RecordSet {
public:
    explicit RecordSet(std::vector<Record> records, Provenance provenance = Provenance::ingested);

    const std::vector<Record>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const Record& operator[](std::size_t i) const { return records_[i]; }
    auto begin() const { return records_.begin(); }
    auto end() const { return records_.end(); }

    Provenance provenance() const { return provenance_; }
    const FeatureStats& stats(Column c) const { return stats_[static_cast<std::size_t>(c)]; }

    std::vector<double> column(Column c) const;

    // New set holding the records at `indices`, in that order.
    RecordSet subset(const std::vector<std::size_t>& indices) const;

private:
    std::vector<Record> records_;
    Provenance provenance_;
    std::array<FeatureStats, kColumnCount> stats_{};
};

// ---------------------------------------------------------------------------
// CSV persistence

// Writes the fixed 12-column header, LF line endings, 17 significant digits.
void save_csv(const RecordSet& set, const std::filesystem::path& path);
void write_csv(const RecordSet& set, std::ostream& out);

// Columns may appear in any order but must be exactly the 12 documented names.
// Throws DataError naming the row and column for malformed cells.
RecordSet load_csv(const std::filesystem::path& path);
RecordSet read_csv(std::istream& in);

// Same CSV plus a trailing `is_poisoned` column of 0/1 labels.
struct LabeledRecords {
    RecordSet records;
    std::vector<int> labels;
};
void save_labeled_csv(const RecordSet& set, const std::vector<int>& labels,
                      const std::filesystem::path& path);
void write_labeled_csv(const RecordSet& set, const std::vector<int>& labels, std::ostream& out);
LabeledRecords load_labeled_csv(const std::filesystem::path& path);
LabeledRecords read_labeled_csv(std::istream& in);

std::string format_double(double value);  // %.17g

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
    double train = 0.4;
    double poison_pool = 0.4;
    double test = 0.2;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct Split {
    RecordSet train;
    RecordSet poison_pool;
    RecordSet test;
};

// Part sizes under the cumulative-floor rule: floor(r0*N), floor((r0+r1)*N) - floor(r0*N), rest.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

// Seeded uniform shuffle followed by the cumulative-floor cut.
Split split(const RecordSet& set, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Statistics

using CorrelationMatrix = std::array<std::array<double, kColumnCount>, kColumnCount>;

// Pearson correlation between two equally long series; 0 if either is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

CorrelationMatrix correlation_matrix(const RecordSet& set);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct Histogram {
    std::vector<HistogramBin> bins;
    bool degenerate = false;  // constant input collapsed to one bin
};

// Equal-width bins over [min, max]; the last bin is closed on the right.
Histogram histogram(const std::vector<double>& values, std::size_t bins);
Histogram histogram(const RecordSet& set, Column feature, std::size_t bins);

}  // namespace advmimo
