#pragma once

#include <vector>

#include "vw/io.hpp"
#include "vw/metrics.hpp"
#include "vw/pipeline.hpp"
#include "vw/whitening.hpp"

namespace vw::pipe {

// Eval-mode descriptor for every scan, parallel over scans with results in
// scan order. A failing scan aborts with its id in the message. When keep is
// non-null and whitening is on, the per-scan whitening intermediates are
// stored there (same order).
io::DescriptorDb descriptor_db(const Model& model, const io::ScanSet& scans,
                               const DescriptorOptions& opt = {},
                               std::vector<whiten::WhitenResult>* keep = nullptr);

// Descriptor payloads widened back to doubles, one row per record.
metrics::ItemSet to_item_set(const io::DescriptorDb& db);

}  // namespace vw::pipe
