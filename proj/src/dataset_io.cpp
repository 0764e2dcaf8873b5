#include "fbgskin/dataset_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "fbgskin/errors.hpp"

namespace fbgskin {

namespace {

bool has_gz_suffix(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

// Line-oriented writer over either a FILE* or a gzFile.
class LineWriter {
public:
    explicit LineWriter(const std::string& path) : gz_(has_gz_suffix(path)) {
        if (gz_) {
            gzf_ = gzopen(path.c_str(), "wb");
            if (!gzf_) throw IoError("cannot open " + path + " for writing");
        } else {
            f_ = std::fopen(path.c_str(), "wb");
            if (!f_) throw IoError("cannot open " + path + " for writing");
        }
        path_ = path;
    }

    ~LineWriter() {
        if (gzf_) gzclose(gzf_);
        if (f_) std::fclose(f_);
    }

    void write(const char* data, size_t len) {
        if (gz_) {
            if (gzwrite(gzf_, data, static_cast<unsigned>(len)) !=
                static_cast<int>(len))
                throw IoError("write failed: " + path_);
        } else {
            if (std::fwrite(data, 1, len, f_) != len)
                throw IoError("write failed: " + path_);
        }
    }

private:
    bool gz_;
    gzFile gzf_ = nullptr;
    std::FILE* f_ = nullptr;
    std::string path_;
};

class LineReader {
public:
    explicit LineReader(const std::string& path) : gz_(has_gz_suffix(path)) {
        if (gz_) {
            gzf_ = gzopen(path.c_str(), "rb");
            if (!gzf_) throw IoError("cannot open " + path);
        } else {
            f_ = std::fopen(path.c_str(), "rb");
            if (!f_) throw IoError("cannot open " + path);
        }
    }

    ~LineReader() {
        if (gzf_) gzclose(gzf_);
        if (f_) std::fclose(f_);
    }

    bool getline(std::string& out) {
        out.clear();
        char buf[16384];
        for (;;) {
            char* got = gz_ ? gzgets(gzf_, buf, sizeof(buf))
                            : std::fgets(buf, sizeof(buf), f_);
            if (!got) return !out.empty();
            out += buf;
            if (!out.empty() && out.back() == '\n') {
                out.pop_back();
                if (!out.empty() && out.back() == '\r') out.pop_back();
                return true;
            }
        }
    }

private:
    bool gz_;
    gzFile gzf_ = nullptr;
    std::FILE* f_ = nullptr;
};

std::string channel_header(int channels) {
    std::string h = "indentation_id,t_s,x_mm,y_mm,fz_N";
    char buf[24];
    for (int c = 1; c <= channels; ++c) {
        std::snprintf(buf, sizeof(buf), ",dl%02d_nm", c);
        h += buf;
    }
    return h;
}

[[noreturn]] void parse_fail(long row, const std::string& what) {
    throw IoError("dataset csv row " + std::to_string(row) + ": " + what);
}

double parse_double(const char*& p, const char* end, long row, const char* col) {
    double v{};
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{}) parse_fail(row, std::string("non-numeric ") + col);
    p = res.ptr;
    return v;
}

long parse_long(const char*& p, const char* end, long row, const char* col) {
    long v{};
    const auto res = std::from_chars(p, end, v);
    if (res.ec != std::errc{}) parse_fail(row, std::string("non-numeric ") + col);
    p = res.ptr;
    return v;
}

void expect_comma(const char*& p, const char* end, long row, const char* col) {
    if (p >= end || *p != ',')
        parse_fail(row, std::string("missing column ") + col);
    ++p;
}

}  // namespace

void save_dataset_csv(const Dataset& dataset, const std::string& path) {
    const int channels = static_cast<int>(dataset.layout.sensors.size());
    LineWriter out(path);
    const std::string header = channel_header(channels) + "\n";
    out.write(header.data(), header.size());
    std::string line;
    line.reserve(64 + 12 * channels);
    char buf[64];
    for (const auto& ind : dataset.indentations) {
        for (const auto& fr : ind.frames) {
            line.clear();
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f", ind.id, fr.t,
                          ind.location.x, ind.location.y, fr.force_z);
            line += buf;
            for (long c = 0; c < fr.shifts.size(); ++c) {
                std::snprintf(buf, sizeof(buf), ",%.6f", fr.shifts[c]);
                line += buf;
            }
            line += "\n";
            out.write(line.data(), line.size());
        }
    }
}

Dataset load_dataset_csv(const std::string& path) {
    LineReader in(path);
    std::string line;
    if (!in.getline(line)) throw IoError("dataset csv: empty file " + path);

    // channel count from the header
    int channels = 0;
    {
        size_t pos = 0;
        std::vector<std::string> cols;
        while (pos != std::string::npos) {
            const size_t next = line.find(',', pos);
            cols.push_back(line.substr(pos, next == std::string::npos ? next : next - pos));
            pos = (next == std::string::npos) ? next : next + 1;
        }
        const char* fixed[5] = {"indentation_id", "t_s", "x_mm", "y_mm", "fz_N"};
        for (int i = 0; i < 5; ++i) {
            if (static_cast<size_t>(i) >= cols.size() || cols[i] != fixed[i])
                throw IoError(std::string("dataset csv: missing column ") + fixed[i]);
        }
        channels = static_cast<int>(cols.size()) - 5;
        char expect[16];
        for (int c = 0; c < channels; ++c) {
            std::snprintf(expect, sizeof(expect), "dl%02d_nm", c + 1);
            if (cols[5 + c] != expect)
                throw IoError(std::string("dataset csv: missing column ") + expect);
        }
        if (channels < 1) throw IoError("dataset csv: no shift columns");
    }

    Dataset ds;
    ds.layout = build_default_layout();
    const int expected = static_cast<int>(ds.layout.sensors.size());
    if (channels != expected) {
        char expect[16];
        std::snprintf(expect, sizeof(expect), "dl%02d_nm",
                      std::min(channels + 1, expected));
        throw IoError(channels < expected
                          ? std::string("dataset csv: missing column ") + expect
                          : "dataset csv: too many shift columns for a " +
                                std::to_string(expected) + "-sensor layout");
    }
    long row = 1;
    Indentation* cur = nullptr;
    std::vector<char> seen_ids;
    while (in.getline(line)) {
        ++row;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        const long id = parse_long(p, end, row, "indentation_id");
        expect_comma(p, end, row, "t_s");
        const double t = parse_double(p, end, row, "t_s");
        expect_comma(p, end, row, "x_mm");
        const double x = parse_double(p, end, row, "x_mm");
        expect_comma(p, end, row, "y_mm");
        const double y = parse_double(p, end, row, "y_mm");
        expect_comma(p, end, row, "fz_N");
        const double f = parse_double(p, end, row, "fz_N");

        if (!cur || cur->id != id) {
            if (id >= 0 && static_cast<size_t>(id) < seen_ids.size() && seen_ids[id])
                parse_fail(row, "indentation ids must be grouped and unique");
            if (id < 0) parse_fail(row, "negative indentation_id");
            if (static_cast<size_t>(id) >= seen_ids.size()) seen_ids.resize(id + 1, 0);
            seen_ids[id] = 1;
            ds.indentations.emplace_back();
            cur = &ds.indentations.back();
            cur->id = static_cast<int>(id);
            cur->location = {x, y};
        } else if (!cur->frames.empty() && t <= cur->frames.back().t) {
            parse_fail(row, "non-monotone t_s within an indentation");
        }
        SensorFrame fr;
        fr.t = t;
        fr.force_z = f;
        fr.shifts.resize(channels);
        for (int c = 0; c < channels; ++c) {
            char name[16];
            std::snprintf(name, sizeof(name), "dl%02d_nm", c + 1);
            expect_comma(p, end, row, name);
            fr.shifts[c] = parse_double(p, end, row, name);
        }
        if (p != end) parse_fail(row, "trailing characters");
        cur->frames.push_back(std::move(fr));
    }
    if (ds.indentations.empty()) throw IoError("dataset csv: no data rows in " + path);

    // increasing-load phase ends at the force peak (first maximum)
    for (auto& ind : ds.indentations) {
        int best = 0;
        for (size_t i = 1; i < ind.frames.size(); ++i)
            if (ind.frames[i].force_z > ind.frames[best].force_z)
                best = static_cast<int>(i);
        ind.ramp_end = best + 1;
    }
    return ds;
}

void save_frames_csv(const std::vector<SensorFrame>& frames, const std::string& path) {
    if (frames.empty()) throw std::invalid_argument("no frames to save");
    const int channels = static_cast<int>(frames.front().shifts.size());
    LineWriter out(path);
    std::string header = "t_s";
    char buf[64];
    for (int c = 1; c <= channels; ++c) {
        std::snprintf(buf, sizeof(buf), ",dl%02d_nm", c);
        header += buf;
    }
    header += "\n";
    out.write(header.data(), header.size());
    std::string line;
    for (const auto& fr : frames) {
        line.clear();
        std::snprintf(buf, sizeof(buf), "%.6f", fr.t);
        line += buf;
        for (long c = 0; c < fr.shifts.size(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.6f", fr.shifts[c]);
            line += buf;
        }
        line += "\n";
        out.write(line.data(), line.size());
    }
}

std::vector<SensorFrame> load_frames_csv(const std::string& path) {
    LineReader in(path);
    std::string line;
    if (!in.getline(line)) throw IoError("frames csv: empty file " + path);
    const int channels = static_cast<int>(std::count(line.begin(), line.end(), ','));
    if (channels < 1 || line.rfind("t_s", 0) != 0)
        throw IoError("frames csv: bad header in " + path);
    std::vector<SensorFrame> frames;
    long row = 1;
    while (in.getline(line)) {
        ++row;
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        SensorFrame fr;
        fr.t = parse_double(p, end, row, "t_s");
        fr.shifts.resize(channels);
        for (int c = 0; c < channels; ++c) {
            char name[16];
            std::snprintf(name, sizeof(name), "dl%02d_nm", c + 1);
            expect_comma(p, end, row, name);
            fr.shifts[c] = parse_double(p, end, row, name);
        }
        frames.push_back(std::move(fr));
    }
    return frames;
}

}  // namespace fbgskin
