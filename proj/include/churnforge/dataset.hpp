#pragma once

#include <span>

#include "churnforge/feature_matrix.hpp"
#include "churnforge/records.hpp"
#include "churnforge/social_graph.hpp"

namespace churnforge {

/// SNA-only matrix over `ids`; ids missing from `sna` get isolated-node values.
FeatureMatrix sna_matrix(std::span<const std::string> ids, std::span<const SnaFeatureRow> sna, double damping);

/// Outer join of statistical features with HOME SNA rows on id. Customers
/// absent from the graph get isolated-node SNA values; rows that only exist
/// in the graph get missing statistical cells and profile passthrough values.
/// Throws Error(SchemaCollision) if a name occurs on both sides.
FeatureMatrix merge(const FeatureMatrix& statistical, std::span<const SnaFeatureRow> sna,
                    std::span<const CustomerProfile> profiles, double damping = 0.85);

/// Drops customers activated within `exclusion_months` before the baseline and
/// joins the rest to labels. Throws Error(MissingLabel) for an unlabeled row.
LabeledDataset assemble(const FeatureMatrix& m, std::span<const LabelRecord> labels,
                        std::span<const CustomerProfile> profiles, Date baseline, int exclusion_months = 4);

}  // namespace churnforge
