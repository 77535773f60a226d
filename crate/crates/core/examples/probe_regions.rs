//! Fit logistic probes for target number on last-layer token vectors, by
//! region and by position in the fixed pattern, with permuted-label controls.
//!
//! cargo run --release --example probe_regions -- [SENTENCES] [EPOCHS]

mod common;

use accord::probing::{
    average_cells, extract_representations, pattern_items, positional_probe_suite, position_labels, region_probe_suite,
    PositionalConfig, ProbeConfig, Region,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let sentences = args.next().transpose()?.unwrap_or(12000);
    let epochs = args.next().transpose()?.unwrap_or(4);
    let d = common::desk(sentences, epochs);

    let records = extract_representations(&d.model, &d.vocab, &d.instances, &d.heldout)?;
    let cfg = ProbeConfig { min_cell: 20, max_iter: 300, ..ProbeConfig::default() };
    let result = region_probe_suite(&records, &cfg)?;
    println!("{} records, {} probes, {} cells skipped", records.len(), result.cells.len(), result.skipped.len());
    for r in [Region::Prefix, Region::Cue, Region::Context, Region::Target, Region::Suffix] {
        match result.region_mean(r) {
            Some(m) => println!("  {:<8} {:>5.1}%", r.as_str(), 100.0 * m),
            None => println!("  {:<8}     -", r.as_str()),
        }
    }
    let off = result.cells.iter().filter(|c| c.control_within(3.0) == Some(false)).count();
    println!("  controls outside 3 sd of chance: {off}");

    let positional = PositionalConfig { probe: cfg, n_train: 200, n_test: 50, ..PositionalConfig::default() };
    let items = pattern_items(&d.model, &d.vocab, &d.instances, &d.heldout, positional.window)?;
    let result = positional_probe_suite(&items, &positional)?;
    println!("\n{} pattern items, slots {}", items.len(), position_labels(positional.window).join(" "));
    for w in &result.warnings {
        println!("  warning: {w}");
    }
    let means = average_cells(&result);
    let of = |name: &str| means.iter().find(|(c, _, _)| c == name).map(|m| format!("{:>5.1}%", 100.0 * m.1));
    println!("  {:<8} {:>6} {:>10} {:>13}", "slot", "all", "attractor", "no attractor");
    for slot in position_labels(positional.window) {
        let cells = ["all", "attractor", "no_attractor"].map(|c| of(&format!("{slot}/{c}")).unwrap_or_else(|| "     -".into()));
        println!("  {slot:<8} {:>6} {:>10} {:>13}", cells[0], cells[1], cells[2]);
    }
    let leaked: usize = result.splits.iter().map(|s| s.shared_ids()).sum();
    println!("  sentences shared between train and test: {leaked}");
    Ok(())
}
