#include "vw/pooldb.hpp"

#include <stdexcept>
#include <string>

namespace vw::pipe {

io::DescriptorDb descriptor_db(const Model& model, const io::ScanSet& scans,
                               const DescriptorOptions& opt, std::vector<whiten::WhitenResult>* keep) {
  io::DescriptorDb db;
  db.flags = opt.whiten ? io::DescriptorDb::kWhitenedFlag : 0;
  db.c = std::uint32_t(model.cfg.c);
  db.m = std::uint32_t(model.cfg.m);
  const int n = int(scans.scans.size());
  db.records.resize(std::size_t(n));
  if (keep) keep->resize(std::size_t(n));

  std::string failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const io::Scan& s = scans.scans[std::size_t(i)];
    try {
      DescriptorOut d = descriptor(model, s.data, opt);
      io::DescriptorRecord& rec = db.records[std::size_t(i)];
      rec.id = s.id;
      rec.x = s.x;
      rec.y = s.y;
      rec.z = s.z;
      rec.desc.resize(d.flat.size());
      for (std::size_t k = 0; k < d.flat.size(); ++k) rec.desc[k] = float(d.flat[k]);
      if (keep && d.wr) (*keep)[std::size_t(i)] = std::move(*d.wr);
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) failure = "scan " + std::to_string(s.id) + ": " + e.what();
    }
  }
  if (!failure.empty()) throw std::runtime_error("descriptor_db: " + failure);
  return db;
}

metrics::ItemSet to_item_set(const io::DescriptorDb& db) {
  metrics::ItemSet set;
  const int n = int(db.records.size());
  const int d = int(db.dims());
  set.ids.reserve(std::size_t(n));
  set.desc = Mat(n, d);
  set.pos = Mat(n, 3);
  for (int i = 0; i < n; ++i) {
    const io::DescriptorRecord& r = db.records[std::size_t(i)];
    set.ids.push_back(r.id);
    for (int j = 0; j < d; ++j) set.desc(i, j) = double(r.desc[std::size_t(j)]);
    set.pos(i, 0) = r.x;
    set.pos(i, 1) = r.y;
    set.pos(i, 2) = r.z;
  }
  return set;
}

}  // namespace vw::pipe
