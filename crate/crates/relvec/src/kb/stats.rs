//! Knowledge-base statistics after vocabulary intersection: global counts,
//! per-pathway aggregates, and per-year slice tables.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::subset::{
    filter_pathways, pathway_entities_up_to, restrict_pathway, restrict_pathway_year, restrict_year,
    split_interval, IntervalTag,
};
use super::{EntityId, EntityKind, KbError, KnowledgeBase};
use crate::embedding::EmbeddingStore;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GlobalStats {
    /// |D| over all loaded files, before and after vocabulary intersection.
    pub drugs_total: usize,
    pub drugs_in_vocab: usize,
    pub genes_total: usize,
    pub genes_in_vocab: usize,
    pub relations_total: usize,
    /// Pairs whose two entities are both in the vocabulary.
    pub relations_in_vocab: usize,
    /// Drugs with at least one surviving relation.
    pub related_drugs: usize,
    /// Genes with at least one surviving relation.
    pub related_genes: usize,
    /// Mean answer-set size over related drugs.
    pub mean_genes_per_drug: f64,
    /// Mean answer-set size over related genes.
    pub mean_drugs_per_gene: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PathwayStats {
    pub retained_pathways: usize,
    /// Sum over pathways of drugs with a within-pathway relation.
    pub sum_related_drugs: usize,
    /// Sum over pathways of member drugs with any relation.
    pub sum_member_related_drugs: usize,
    pub sum_related_genes: usize,
    pub sum_member_related_genes: usize,
    /// Mean over pathways of the mean within-pathway answer-set size per drug.
    pub mean_pathway_genes_per_drug: f64,
    pub mean_pathway_drugs_per_gene: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct YearStats {
    pub year: i32,
    pub drugs_up_to_year: usize,
    pub genes_up_to_year: usize,
    pub known_pairs: usize,
    pub unknown_pairs: usize,
    pub unknown_related_drugs: usize,
    pub related_drugs: usize,
    pub unknown_related_genes: usize,
    pub related_genes: usize,
    pub mean_known_genes_per_drug: f64,
    pub mean_unknown_genes_per_drug: f64,
    pub mean_known_drugs_per_gene: f64,
    pub mean_unknown_drugs_per_gene: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PathwayYearStats {
    pub year: i32,
    pub sum_unknown_related_drugs: usize,
    pub sum_member_unknown_related_drugs: usize,
    pub sum_related_drugs: usize,
    pub sum_member_related_drugs: usize,
    pub sum_unknown_related_genes: usize,
    pub sum_member_unknown_related_genes: usize,
    pub sum_related_genes: usize,
    pub sum_member_related_genes: usize,
    pub mean_known_genes_per_drug: f64,
    pub mean_unknown_genes_per_drug: f64,
    pub mean_known_drugs_per_gene: f64,
    pub mean_unknown_drugs_per_gene: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StatisticsReport {
    pub global: GlobalStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathway: Option<PathwayStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<YearStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathway_year: Option<PathwayYearStats>,
}

#[derive(Debug, Clone)]
pub struct StatsOptions {
    /// Emit the per-pathway aggregate table when pathways are loaded.
    pub per_pathway: bool,
    /// Emit the year-slice table (and, with pathways, the pathway-year table)
    /// for this year.
    pub per_year: Option<i32>,
    pub min_related_drugs: usize,
    pub min_related_genes: usize,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            per_pathway: false,
            per_year: None,
            min_related_drugs: 2,
            min_related_genes: 2,
        }
    }
}

fn in_vocab(store: &EmbeddingStore, ids: &BTreeSet<EntityId>) -> BTreeSet<EntityId> {
    ids.iter().filter(|e| store.contains(e.as_str())).cloned().collect()
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let mut count = 0usize;
    let mut sum = 0usize;
    for v in values {
        count += 1;
        sum += v;
    }
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

/// Statistics after intersecting the knowledge base with the store
/// vocabulary. Pre-intersection entity and relation counts are reported
/// alongside for comparison.
pub fn kb_statistics(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    options: &StatsOptions,
) -> Result<StatisticsReport, KbError> {
    let drugs_vocab = in_vocab(store, kb.drugs());
    let genes_vocab = in_vocab(store, kb.genes());
    let (relations, _) = kb.relation_subset().intersect_vocabulary(store);

    let by_drug = relations.answers_by_drug();
    let by_gene = relations.answers_by_gene();
    let global = GlobalStats {
        drugs_total: kb.drugs().len(),
        drugs_in_vocab: drugs_vocab.len(),
        genes_total: kb.genes().len(),
        genes_in_vocab: genes_vocab.len(),
        relations_total: kb.relations().len(),
        relations_in_vocab: relations.len(),
        related_drugs: by_drug.len(),
        related_genes: by_gene.len(),
        mean_genes_per_drug: mean(by_drug.values().map(|s| s.len())),
        mean_drugs_per_gene: mean(by_gene.values().map(|s| s.len())),
    };

    let retained = filter_pathways(kb, Some(store), options.min_related_drugs, options.min_related_genes);

    let pathway = if options.per_pathway && kb.pathway_ids().next().is_some() {
        let related_drugs_global = relations.project_drugs();
        let related_genes_global = relations.project_genes();
        let mut stats = PathwayStats {
            retained_pathways: retained.len(),
            ..Default::default()
        };
        let mut drug_means = Vec::new();
        let mut gene_means = Vec::new();
        for p in &retained {
            let (subset, _) = restrict_pathway(kb, p)?.intersect_vocabulary(store);
            let by_drug = subset.answers_by_drug();
            let by_gene = subset.answers_by_gene();
            stats.sum_related_drugs += by_drug.len();
            stats.sum_related_genes += by_gene.len();
            let members = kb.pathway_members(p).expect("retained pathway exists");
            stats.sum_member_related_drugs += in_vocab(store, &members.drugs)
                .intersection(&related_drugs_global)
                .count();
            stats.sum_member_related_genes += in_vocab(store, &members.genes)
                .intersection(&related_genes_global)
                .count();
            drug_means.push(mean(by_drug.values().map(|s| s.len())));
            gene_means.push(mean(by_gene.values().map(|s| s.len())));
        }
        stats.mean_pathway_genes_per_drug = if drug_means.is_empty() {
            0.0
        } else {
            drug_means.iter().sum::<f64>() / drug_means.len() as f64
        };
        stats.mean_pathway_drugs_per_gene = if gene_means.is_empty() {
            0.0
        } else {
            gene_means.iter().sum::<f64>() / gene_means.len() as f64
        };
        Some(stats)
    } else {
        None
    };

    let (year, pathway_year) = match options.per_year {
        None => (None, None),
        Some(y) => {
            let sliced = restrict_year(kb, y)?;
            let (sliced, _) = sliced.intersect_vocabulary(store);
            let known = split_interval(kb, &sliced, y, IntervalTag::Lower)?;
            let unknown = split_interval(kb, &sliced, y, IntervalTag::Upper)?;
            let known_by_drug = known.answers_by_drug();
            let unknown_by_drug = unknown.answers_by_drug();
            let known_by_gene = known.answers_by_gene();
            let unknown_by_gene = unknown.answers_by_gene();
            let year_stats = YearStats {
                year: y,
                drugs_up_to_year: in_vocab(store, &kb.entities_up_to_year(EntityKind::Drug, y)).len(),
                genes_up_to_year: in_vocab(store, &kb.entities_up_to_year(EntityKind::Gene, y)).len(),
                known_pairs: known.len(),
                unknown_pairs: unknown.len(),
                unknown_related_drugs: unknown_by_drug.len(),
                related_drugs: sliced.answers_by_drug().len(),
                unknown_related_genes: unknown_by_gene.len(),
                related_genes: sliced.answers_by_gene().len(),
                mean_known_genes_per_drug: mean(known_by_drug.values().map(|s| s.len())),
                mean_unknown_genes_per_drug: mean(unknown_by_drug.values().map(|s| s.len())),
                mean_known_drugs_per_gene: mean(known_by_gene.values().map(|s| s.len())),
                mean_unknown_drugs_per_gene: mean(unknown_by_gene.values().map(|s| s.len())),
            };

            let py = if options.per_pathway && kb.pathway_ids().next().is_some() {
                let global_unknown_drugs = unknown.project_drugs();
                let global_related_drugs = sliced.project_drugs();
                let global_unknown_genes = unknown.project_genes();
                let global_related_genes = sliced.project_genes();
                let mut stats = PathwayYearStats {
                    year: y,
                    ..Default::default()
                };
                let mut known_drug_means = Vec::new();
                let mut unknown_drug_means = Vec::new();
                let mut known_gene_means = Vec::new();
                let mut unknown_gene_means = Vec::new();
                for p in &retained {
                    let (subset, _) = restrict_pathway_year(kb, p, y)?.intersect_vocabulary(store);
                    let known_p = split_interval(kb, &subset, y, IntervalTag::Lower)?;
                    let unknown_p = split_interval(kb, &subset, y, IntervalTag::Upper)?;
                    stats.sum_unknown_related_drugs += unknown_p.project_drugs().len();
                    stats.sum_related_drugs += subset.project_drugs().len();
                    stats.sum_unknown_related_genes += unknown_p.project_genes().len();
                    stats.sum_related_genes += subset.project_genes().len();
                    let member_drugs =
                        in_vocab(store, &pathway_entities_up_to(kb, p, EntityKind::Drug, Some(y))?);
                    let member_genes =
                        in_vocab(store, &pathway_entities_up_to(kb, p, EntityKind::Gene, Some(y))?);
                    stats.sum_member_unknown_related_drugs +=
                        member_drugs.intersection(&global_unknown_drugs).count();
                    stats.sum_member_related_drugs +=
                        member_drugs.intersection(&global_related_drugs).count();
                    stats.sum_member_unknown_related_genes +=
                        member_genes.intersection(&global_unknown_genes).count();
                    stats.sum_member_related_genes +=
                        member_genes.intersection(&global_related_genes).count();
                    known_drug_means.push(mean(known_p.answers_by_drug().values().map(|s| s.len())));
                    unknown_drug_means.push(mean(unknown_p.answers_by_drug().values().map(|s| s.len())));
                    known_gene_means.push(mean(known_p.answers_by_gene().values().map(|s| s.len())));
                    unknown_gene_means.push(mean(unknown_p.answers_by_gene().values().map(|s| s.len())));
                }
                let avg = |v: &[f64]| {
                    if v.is_empty() {
                        0.0
                    } else {
                        v.iter().sum::<f64>() / v.len() as f64
                    }
                };
                stats.mean_known_genes_per_drug = avg(&known_drug_means);
                stats.mean_unknown_genes_per_drug = avg(&unknown_drug_means);
                stats.mean_known_drugs_per_gene = avg(&known_gene_means);
                stats.mean_unknown_drugs_per_gene = avg(&unknown_gene_means);
                Some(stats)
            } else {
                None
            };
            (Some(year_stats), py)
        }
    };

    Ok(StatisticsReport {
        global,
        pathway,
        year,
        pathway_year,
    })
}

impl StatisticsReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let g = &self.global;
        out.push_str("| Statistic | Value |\n|---|---|\n");
        out.push_str(&format!("| drugs (total) | {} |\n", g.drugs_total));
        out.push_str(&format!("| drugs (in vocabulary) | {} |\n", g.drugs_in_vocab));
        out.push_str(&format!("| genes (total) | {} |\n", g.genes_total));
        out.push_str(&format!("| genes (in vocabulary) | {} |\n", g.genes_in_vocab));
        out.push_str(&format!("| relations (total) | {} |\n", g.relations_total));
        out.push_str(&format!("| relations (in vocabulary) | {} |\n", g.relations_in_vocab));
        out.push_str(&format!("| related drugs | {} |\n", g.related_drugs));
        out.push_str(&format!("| related genes | {} |\n", g.related_genes));
        out.push_str(&format!("| mean genes per drug | {:.3} |\n", g.mean_genes_per_drug));
        out.push_str(&format!("| mean drugs per gene | {:.3} |\n", g.mean_drugs_per_gene));
        if let Some(p) = &self.pathway {
            out.push_str("\n| Pathway statistic | Value |\n|---|---|\n");
            out.push_str(&format!("| retained pathways | {} |\n", p.retained_pathways));
            out.push_str(&format!("| sum related drugs | {} |\n", p.sum_related_drugs));
            out.push_str(&format!(
                "| sum member related drugs | {} |\n",
                p.sum_member_related_drugs
            ));
            out.push_str(&format!("| sum related genes | {} |\n", p.sum_related_genes));
            out.push_str(&format!(
                "| sum member related genes | {} |\n",
                p.sum_member_related_genes
            ));
            out.push_str(&format!(
                "| mean pathway genes per drug | {:.3} |\n",
                p.mean_pathway_genes_per_drug
            ));
            out.push_str(&format!(
                "| mean pathway drugs per gene | {:.3} |\n",
                p.mean_pathway_drugs_per_gene
            ));
        }
        if let Some(y) = &self.year {
            out.push_str(&format!("\n| Year {} statistic | Value |\n|---|---|\n", y.year));
            out.push_str(&format!("| drugs up to year | {} |\n", y.drugs_up_to_year));
            out.push_str(&format!("| genes up to year | {} |\n", y.genes_up_to_year));
            out.push_str(&format!("| known pairs | {} |\n", y.known_pairs));
            out.push_str(&format!("| unknown pairs | {} |\n", y.unknown_pairs));
            out.push_str(&format!("| unknown related drugs | {} |\n", y.unknown_related_drugs));
            out.push_str(&format!("| related drugs | {} |\n", y.related_drugs));
            out.push_str(&format!("| unknown related genes | {} |\n", y.unknown_related_genes));
            out.push_str(&format!("| related genes | {} |\n", y.related_genes));
            out.push_str(&format!(
                "| mean known genes per drug | {:.3} |\n",
                y.mean_known_genes_per_drug
            ));
            out.push_str(&format!(
                "| mean unknown genes per drug | {:.3} |\n",
                y.mean_unknown_genes_per_drug
            ));
            out.push_str(&format!(
                "| mean known drugs per gene | {:.3} |\n",
                y.mean_known_drugs_per_gene
            ));
            out.push_str(&format!(
                "| mean unknown drugs per gene | {:.3} |\n",
                y.mean_unknown_drugs_per_gene
            ));
        }
        if let Some(py) = &self.pathway_year {
            out.push_str(&format!(
                "\n| Pathway-year {} statistic | Value |\n|---|---|\n",
                py.year
            ));
            out.push_str(&format!(
                "| sum unknown related drugs | {} |\n",
                py.sum_unknown_related_drugs
            ));
            out.push_str(&format!(
                "| sum member unknown related drugs | {} |\n",
                py.sum_member_unknown_related_drugs
            ));
            out.push_str(&format!("| sum related drugs | {} |\n", py.sum_related_drugs));
            out.push_str(&format!(
                "| sum member related drugs | {} |\n",
                py.sum_member_related_drugs
            ));
            out.push_str(&format!(
                "| sum unknown related genes | {} |\n",
                py.sum_unknown_related_genes
            ));
            out.push_str(&format!(
                "| sum member unknown related genes | {} |\n",
                py.sum_member_unknown_related_genes
            ));
            out.push_str(&format!("| sum related genes | {} |\n", py.sum_related_genes));
            out.push_str(&format!(
                "| sum member related genes | {} |\n",
                py.sum_member_related_genes
            ));
            out.push_str(&format!(
                "| mean known genes per drug | {:.3} |\n",
                py.mean_known_genes_per_drug
            ));
            out.push_str(&format!(
                "| mean unknown genes per drug | {:.3} |\n",
                py.mean_unknown_genes_per_drug
            ));
            out.push_str(&format!(
                "| mean known drugs per gene | {:.3} |\n",
                py.mean_known_drugs_per_gene
            ));
            out.push_str(&format!(
                "| mean unknown drugs per gene | {:.3} |\n",
                py.mean_unknown_drugs_per_gene
            ));
        }
        out
    }
}
