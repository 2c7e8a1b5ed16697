pub mod barrier;
pub mod blowdown;
pub mod density;
pub mod flow;
pub mod levelsets;
pub mod soliton;
pub mod verify;

use lmcf::solitons::{FamilyDescriptor, SolitonFamily, SolitonKind};

use crate::output::Failure;
use crate::settings::{build_family, Config, FamilySpec};

/// Resolves the family of a config in place and builds it. `finest` is the
/// smallest spacing the command will evaluate at; generating curves are
/// integrated finely enough for it.
pub fn setup_family<S>(
    cfg: &mut Config<S>,
    default_kind: SolitonKind,
    default_h: f64,
    finest: impl Fn(f64) -> f64,
) -> Result<(FamilyDescriptor, SolitonFamily), Failure> {
    let spec = cfg.family.clone().unwrap_or_default();
    let desc = spec.resolve(default_kind, cfg.h, default_h)?;
    let h = if desc.kind == SolitonKind::Product {
        desc.window.hv()
    } else {
        desc.window.h
    };
    cfg.h = Some(h);
    cfg.family = Some(FamilySpec::from_descriptor(&desc));
    let mut fine = desc.clone();
    fine.window.h = finest(desc.window.h);
    fine.window.hv = Some(finest(desc.window.hv()));
    let family = build_family(&fine)?;
    Ok((desc, family))
}

/// Rejects times outside the family's domain before any computation.
pub fn check_times(f: &SolitonFamily, times: &[f64]) -> Result<(), Failure> {
    for &t in times {
        f.check_time(t).map_err(|e| Failure::Validation(e.to_string()))?;
    }
    Ok(())
}
