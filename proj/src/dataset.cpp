#include "advmimo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

namespace {

constexpr std::string_view kLabelColumn = "is_poisoned";

std::size_t idx(Column c) { return static_cast<std::size_t>(c); }

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::string_view column) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw DataError("row " + std::to_string(row) + ", column " + std::string(column) +
                        ": non-numeric value '" + std::string(cell) + "'");
    }
    return value;
}

int parse_binary(double value, std::size_t row, std::string_view column) {
    if (value != 0.0 && value != 1.0) {
        throw DataError("row " + std::to_string(row) + ", column " + std::string(column) +
                        ": value must be 0 or 1, got " + format_double(value));
    }
    return static_cast<int>(value);
}

struct ParsedCsv {
    std::vector<Record> records;
    std::vector<int> labels;
};

ParsedCsv parse(std::istream& in, bool labeled) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV: missing header");

    const auto header = split_fields(line);
    // position in the file -> column slot (0..11 record columns, 12 = label)
    std::vector<std::size_t> slot(header.size());
    std::array<bool, kColumnCount + 1> seen{};
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = trim(header[i]);
        std::size_t s = 0;
        if (auto c = column_from_name(name)) {
            s = idx(*c);
        } else if (labeled && name == kLabelColumn) {
            s = kColumnCount;
        } else {
            throw DataError("unexpected column: " + std::string(name));
        }
        if (seen[s]) throw DataError("duplicate column: " + std::string(name));
        seen[s] = true;
        slot[i] = s;
    }
    for (std::size_t s = 0; s < kColumnCount; ++s) {
        if (!seen[s]) throw DataError("missing column: " + std::string(kColumnNames[s]));
    }
    if (labeled && !seen[kColumnCount]) throw DataError("missing column: " + std::string(kLabelColumn));

    ParsedCsv out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_fields(line);
        if (cells.size() != header.size()) {
            throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()));
        }
        Record r;
        int label = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string_view name =
                slot[i] == kColumnCount ? kLabelColumn : kColumnNames[slot[i]];
            const double v = parse_cell(cells[i], row, name);
            if (slot[i] == kColumnCount) {
                label = parse_binary(v, row, name);
            } else if (slot[i] == idx(Column::los)) {
                r.los = parse_binary(v, row, name);
            } else {
                r.set(static_cast<Column>(slot[i]), v);
            }
        }
        out.records.push_back(r);
        out.labels.push_back(label);
    }
    if (out.records.empty()) throw DataError("CSV contains a header but no records");
    return out;
}

void write_header(std::ostream& out, bool labeled) {
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (i) out << ',';
        out << kColumnNames[i];
    }
    if (labeled) out << ',' << kLabelColumn;
    out << '\n';
}

void write_row(std::ostream& out, const Record& r) {
    const auto v = r.values();
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (i) out << ',';
        if (i == idx(Column::los)) {
            out << r.los;
        } else {
            out << format_double(v[i]);
        }
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path.string());
    return f;
}

}  // namespace

std::string_view column_name(Column c) { return kColumnNames[idx(c)]; }

std::optional<Column> column_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (kColumnNames[i] == name) return static_cast<Column>(i);
    }
    return std::nullopt;
}

double Record::get(Column c) const {
    switch (c) {
        case Column::x_coord: return x_coord;
        case Column::y_coord: return y_coord;
        case Column::distance: return distance;
        case Column::pathloss: return pathloss;
        case Column::doa_phi: return doa_phi;
        case Column::doa_theta: return doa_theta;
        case Column::dod_phi: return dod_phi;
        case Column::dod_theta: return dod_theta;
        case Column::phase: return phase;
        case Column::power: return power;
        case Column::time_of_arrival: return time_of_arrival;
        case Column::los: return static_cast<double>(los);
    }
    return 0.0;
}

void Record::set(Column c, double value) {
    switch (c) {
        case Column::x_coord: x_coord = value; break;
        case Column::y_coord: y_coord = value; break;
        case Column::distance: distance = value; break;
        case Column::pathloss: pathloss = value; break;
        case Column::doa_phi: doa_phi = value; break;
        case Column::doa_theta: doa_theta = value; break;
        case Column::dod_phi: dod_phi = value; break;
        case Column::dod_theta: dod_theta = value; break;
        case Column::phase: phase = value; break;
        case Column::power: power = value; break;
        case Column::time_of_arrival: time_of_arrival = value; break;
        case Column::los: los = static_cast<int>(std::lround(value)); break;
    }
}

std::array<double, kColumnCount> Record::values() const {
    std::array<double, kColumnCount> out{};
    for (std::size_t i = 0; i < kColumnCount; ++i) out[i] = get(static_cast<Column>(i));
    return out;
}

RecordSet::RecordSet(std::vector<Record> records, Provenance provenance)
    : records_(std::move(records)), provenance_(provenance) {
    if (records_.empty()) throw DataError("record set is empty");
    const auto n = static_cast<double>(records_.size());
    for (std::size_t c = 0; c < kColumnCount; ++c) {
        FeatureStats s;
        s.min = s.max = records_.front().get(static_cast<Column>(c));
        double sum = 0.0;
        for (const auto& r : records_) {
            const double v = r.get(static_cast<Column>(c));
            if (!std::isfinite(v)) {
                throw DataError("non-finite value in column " + std::string(kColumnNames[c]));
            }
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
        }
        s.mean = sum / n;
        double ss = 0.0;
        for (const auto& r : records_) {
            const double d = r.get(static_cast<Column>(c)) - s.mean;
            ss += d * d;
        }
        s.std = std::sqrt(ss / n);
        stats_[c] = s;
    }
}

std::vector<double> RecordSet::column(Column c) const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.get(c));
    return out;
}

RecordSet RecordSet::subset(const std::vector<std::size_t>& indices) const {
    std::vector<Record> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(records_.at(i));
    return RecordSet(std::move(out), provenance_);
}

std::string format_double(double value) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

void write_csv(const RecordSet& set, std::ostream& out) {
    write_header(out, false);
    for (const auto& r : set) {
        write_row(out, r);
        out << '\n';
    }
}

void save_csv(const RecordSet& set, const std::filesystem::path& path) {
    auto f = open_out(path);
    write_csv(set, f);
    if (!f) throw DataError("write failed: " + path.string());
}

RecordSet read_csv(std::istream& in) { return RecordSet(parse(in, false).records); }

RecordSet load_csv(const std::filesystem::path& path) {
    auto f = open_in(path);
    return read_csv(f);
}

void write_labeled_csv(const RecordSet& set, const std::vector<int>& labels, std::ostream& out) {
    if (labels.size() != set.size()) throw DataError("label count does not match record count");
    write_header(out, true);
    for (std::size_t i = 0; i < set.size(); ++i) {
        write_row(out, set[i]);
        out << ',' << labels[i] << '\n';
    }
}

void save_labeled_csv(const RecordSet& set, const std::vector<int>& labels,
                      const std::filesystem::path& path) {
    auto f = open_out(path);
    write_labeled_csv(set, labels, f);
    if (!f) throw DataError("write failed: " + path.string());
}

LabeledRecords read_labeled_csv(std::istream& in) {
    auto parsed = parse(in, true);
    return {RecordSet(std::move(parsed.records)), std::move(parsed.labels)};
}

LabeledRecords load_labeled_csv(const std::filesystem::path& path) {
    auto f = open_in(path);
    return read_labeled_csv(f);
}

// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
    if (!(train >= 0.0) || !(poison_pool >= 0.0) || !(test >= 0.0)) {
        throw ConfigError("split ratios must be non-negative");
    }
    if (std::abs(train + poison_pool + test - 1.0) > 1e-12) {
        throw ConfigError("split ratios must sum to 1");
    }
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    const auto cut = [n](double fraction) {
        // nudge absorbs representation error in products like 0.4 * 10
        const double x = fraction * static_cast<double>(n);
        return std::min(n, static_cast<std::size_t>(std::floor(x + 1e-9)));
    };
    const std::size_t a = cut(spec.train);
    const std::size_t b = std::max(a, cut(spec.train + spec.poison_pool));
    return {a, b - a, n - b};
}

Split split(const RecordSet& set, const SplitSpec& spec) {
    const auto sizes = split_sizes(set.size(), spec);
    static constexpr std::array<std::string_view, 3> names = {"train", "poison_pool", "test"};
    for (std::size_t i = 0; i < 3; ++i) {
        if (sizes[i] == 0) {
            throw DataError("split leaves the " + std::string(names[i]) + " part empty (N = " +
                            std::to_string(set.size()) + ")");
        }
    }
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));

    const auto part = [&](std::size_t from, std::size_t count) {
        return set.subset(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(from),
                                                   order.begin() + static_cast<std::ptrdiff_t>(from + count)));
    };
    return {part(0, sizes[0]), part(sizes[0], sizes[1]), part(sizes[0] + sizes[1], sizes[2])};
}

// ---------------------------------------------------------------------------

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DataError("pearson: length mismatch");
    if (a.size() < 2) throw DataError("correlation needs at least 2 records");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const RecordSet& set) {
    if (set.size() < 2) throw DataError("correlation needs at least 2 records");
    std::array<std::vector<double>, kColumnCount> cols;
    bool any_variance = false;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
        cols[c] = set.column(static_cast<Column>(c));
        any_variance = any_variance || set.stats(static_cast<Column>(c)).std > 0.0;
    }
    if (!any_variance) throw DataError("correlation needs at least one non-constant feature");

    CorrelationMatrix m{};
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        const bool varies = set.stats(static_cast<Column>(i)).std > 0.0;
        m[i][i] = varies ? 1.0 : 0.0;
        for (std::size_t j = i + 1; j < kColumnCount; ++j) {
            m[i][j] = m[j][i] = pearson(cols[i], cols[j]);
        }
    }
    return m;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    if (values.empty()) throw DataError("histogram of an empty series");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    Histogram h;
    if (hi == lo) {
        h.bins.push_back({lo, hi, values.size()});
        h.degenerate = bins > 1;
        return h;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    h.bins.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        h.bins[b].lo = lo + width * static_cast<double>(b);
        h.bins[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= bins) b = bins - 1;
        // keep assignment consistent with the printed edges
        while (b > 0 && v < h.bins[b].lo) --b;
        while (b + 1 < bins && v >= h.bins[b + 1].lo) ++b;
        ++h.bins[b].count;
    }
    return h;
}

Histogram histogram(const RecordSet& set, Column feature, std::size_t bins) {
    return histogram(set.column(feature), bins);
}

}  // namespace advmimo
