#include "skillsentry/archive.hpp"

#include <zlib.h>

#include <cstring>

#include "skillsentry/util.hpp"

namespace skillsentry {

namespace {

uint16_t rd16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t rd32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string inflate_raw(const unsigned char* data, std::size_t len, std::size_t expected) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw IoError("inflateInit failed");
  std::string out;
  out.resize(expected ? expected : len * 4 + 64);
  zs.next_in = const_cast<unsigned char*>(data);
  zs.avail_in = static_cast<uInt>(len);
  int ret = Z_OK;
  std::size_t written = 0;
  do {
    if (written == out.size()) out.resize(out.size() * 2 + 64);
    zs.next_out = reinterpret_cast<unsigned char*>(out.data()) + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    ret = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (ret == Z_STREAM_END) break;
    if (ret != Z_OK) {
      inflateEnd(&zs);
      throw IoError("zip entry: inflate error");
    }
  } while (true);
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

std::string gunzip(const std::string& raw) {
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  // 15+16: expect a gzip header.
  if (inflateInit2(&zs, MAX_WBITS + 16) != Z_OK) throw IoError("inflateInit failed");
  std::string out;
  out.resize(raw.size() * 4 + 1024);
  zs.next_in = reinterpret_cast<unsigned char*>(const_cast<char*>(raw.data()));
  zs.avail_in = static_cast<uInt>(raw.size());
  std::size_t written = 0;
  int ret = Z_OK;
  do {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = reinterpret_cast<unsigned char*>(out.data()) + written;
    zs.avail_out = static_cast<uInt>(out.size() - written);
    ret = inflate(&zs, Z_NO_FLUSH);
    written = out.size() - zs.avail_out;
    if (ret == Z_STREAM_END) break;
    if (ret != Z_OK) {
      inflateEnd(&zs);
      throw IoError("tar.gz: gzip decode error");
    }
  } while (true);
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

bool entry_is_dir(const std::string& name) { return !name.empty() && name.back() == '/'; }

std::string clean_entry_path(std::string name) {
  if (name.rfind("./", 0) == 0) name = name.substr(2);
  return name;
}

}  // namespace

bool is_zip_path(const std::string& path) {
  return path.size() > 4 && to_lower(path.substr(path.size() - 4)) == ".zip";
}

bool is_tar_gz_path(const std::string& path) {
  std::string p = to_lower(path);
  return (p.size() > 7 && p.substr(p.size() - 7) == ".tar.gz") ||
         (p.size() > 4 && p.substr(p.size() - 4) == ".tgz");
}

std::vector<ArchiveEntry> read_zip(const std::string& path) {
  std::string buf = read_file(path);
  const auto* data = reinterpret_cast<const unsigned char*>(buf.data());
  std::size_t n = buf.size();
  if (n < 22) throw IoError("zip: file too small: " + path);

  // Locate end-of-central-directory: scan backwards for its signature.
  std::size_t eocd = std::string::npos;
  std::size_t scan_limit = n >= 22 + 65536 ? n - 22 - 65536 : 0;
  for (std::size_t i = n - 22; ; --i) {
    if (rd32(data + i) == 0x06054b50) {
      eocd = i;
      break;
    }
    if (i == scan_limit) break;
  }
  if (eocd == std::string::npos) throw IoError("zip: missing end-of-central-directory: " + path);

  uint16_t count = rd16(data + eocd + 10);
  uint32_t cd_off = rd32(data + eocd + 16);

  std::vector<ArchiveEntry> entries;
  std::size_t pos = cd_off;
  for (uint16_t i = 0; i < count; ++i) {
    if (pos + 46 > n || rd32(data + pos) != 0x02014b50) throw IoError("zip: bad central directory");
    uint16_t method = rd16(data + pos + 10);
    uint32_t comp_size = rd32(data + pos + 20);
    uint32_t uncomp_size = rd32(data + pos + 24);
    uint16_t name_len = rd16(data + pos + 28);
    uint16_t extra_len = rd16(data + pos + 30);
    uint16_t comment_len = rd16(data + pos + 32);
    uint32_t local_off = rd32(data + pos + 42);
    std::string name(reinterpret_cast<const char*>(data + pos + 46), name_len);
    pos += 46u + name_len + extra_len + comment_len;

    if (entry_is_dir(name)) continue;
    if (local_off + 30 > n || rd32(data + local_off) != 0x04034b50)
      throw IoError("zip: bad local header for " + name);
    uint16_t lname = rd16(data + local_off + 26);
    uint16_t lextra = rd16(data + local_off + 28);
    std::size_t data_off = local_off + 30u + lname + lextra;
    if (data_off + comp_size > n) throw IoError("zip: truncated entry " + name);

    ArchiveEntry e;
    e.path = clean_entry_path(name);
    if (method == 0) {
      e.bytes.assign(reinterpret_cast<const char*>(data + data_off), comp_size);
    } else if (method == 8) {
      e.bytes = inflate_raw(data + data_off, comp_size, uncomp_size);
    } else {
      throw IoError("zip: unsupported compression method for " + name);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ArchiveEntry> read_tar_gz(const std::string& path) {
  std::string tar = gunzip(read_file(path));
  std::vector<ArchiveEntry> entries;
  std::size_t pos = 0;
  while (pos + 512 <= tar.size()) {
    const char* hdr = tar.data() + pos;
    bool all_zero = true;
    for (int i = 0; i < 512 && all_zero; ++i) all_zero = hdr[i] == 0;
    if (all_zero) break;  // end-of-archive marker

    std::string name(hdr, strnlen(hdr, 100));
    char size_field[13];
    std::memcpy(size_field, hdr + 124, 12);
    size_field[12] = 0;
    std::size_t size = std::strtoull(size_field, nullptr, 8);
    char type = hdr[156];
    // ustar prefix field
    std::string prefix(hdr + 345, strnlen(hdr + 345, 155));
    if (!prefix.empty()) name = prefix + "/" + name;

    pos += 512;
    if (pos + size > tar.size()) throw IoError("tar.gz: truncated entry " + name);
    if ((type == '0' || type == 0) && !entry_is_dir(name)) {
      ArchiveEntry e;
      e.path = clean_entry_path(name);
      e.bytes = tar.substr(pos, size);
      entries.push_back(std::move(e));
    }
    pos += (size + 511) / 512 * 512;
  }
  return entries;
}

}  // namespace skillsentry
