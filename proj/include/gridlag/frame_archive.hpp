#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/raster.hpp"

namespace gridlag::archive {

// On-disk layout of a rasterized frame directory:
//   grid.txt       key = value grid spec and calendar range
//   manifest.csv   channel,date,hour,hour_index,file,missing (one row per file)
//   {pickup|dropoff}_{YYYYMMDD}_{HH}.png

enum class Channel { pickup, dropoff };

[[nodiscard]] std::string frame_filename(Channel channel, Days day, int hour);

struct GridFile {
    raster::GridSpec grid;
    DayRange range;
};

void write_grid(std::ostream& out, const GridFile& g);
/// Throws DataError on a missing or malformed key.
[[nodiscard]] GridFile read_grid(std::istream& in);

struct ManifestEntry {
    std::int64_t hour_index = 0;
    Days day{};
    int hour = 0;
    bool missing = false;
};

/// Writes frames one at a time (any order), then the manifest and grid file
/// on finish().
class ArchiveWriter {
public:
    ArchiveWriter(std::filesystem::path dir, GridFile grid);

    void add(std::int64_t hour_index, const raster::DemandFrame& frame);
    void finish();

private:
    std::filesystem::path dir_;
    GridFile grid_;
    std::vector<std::optional<ManifestEntry>> entries_;
};

void write_archive(const std::filesystem::path& dir, const raster::FrameStore& store, unsigned threads = 0);

struct Archive {
    std::filesystem::path dir;
    GridFile grid;
    std::vector<ManifestEntry> entries;  // indexed by hour
};

/// Reads grid.txt and manifest.csv. Throws DataError when absent or when the
/// manifest does not list every hour of the range exactly once.
[[nodiscard]] Archive open_archive(const std::filesystem::path& dir);

[[nodiscard]] raster::DemandFrame load_frame(const Archive& a, std::int64_t hour_index);
[[nodiscard]] raster::FrameStore load_store(const Archive& a, unsigned threads = 0);

/// Streams the archive once to accumulate activity over `window`.
[[nodiscard]] mask::ActivityMask build_mask(const Archive& a, std::optional<mask::HourWindow> window = {},
                                            unsigned threads = 0);
/// Streams the archive into the masked working form.
[[nodiscard]] mask::MaskedSeries load_masked_series(const Archive& a, const mask::ActivityMask& m,
                                                    unsigned threads = 0);

}  // namespace gridlag::archive
