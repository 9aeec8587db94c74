//! Central finite-difference verification of analytic gradients.

use rand::Rng;

use super::params::{GradSet, ParamSet};
use crate::rng::StreamRng;

/// Worst-case comparison for one named tensor.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub name: String,
    pub coords_checked: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub groups: Vec<GroupReport>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_err).fold(0.0, f64::max)
    }

    pub fn worst_group(&self) -> Option<&GroupReport> {
        self.groups
            .iter()
            .max_by(|a, b| a.max_rel_err.partial_cmp(&b.max_rel_err).unwrap())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&format!(
                "{:<16} coords={:<6} max_rel_err={:.3e} max_abs_err={:.3e}\n",
                g.name, g.coords_checked, g.max_rel_err, g.max_abs_err
            ));
        }
        out.push_str(&format!("overall max_rel_err={:.3e}\n", self.max_rel_err()));
        out
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-6);
    (a - b).abs() / denom
}

/// Compare `analytic` against central differences of `loss` at `params`.
///
/// Tensors whose names appear in `only` (when non-empty) are the selection;
/// an empty model or empty selection yields an empty report. Tensors larger
/// than `max_coords_per_tensor` are spot-checked on a random coordinate
/// subset (pass 0 to check everything).
pub fn finite_diff_report<F>(
    params: &mut ParamSet<f64>,
    analytic: &GradSet<f64>,
    mut loss: F,
    step: f64,
    max_coords_per_tensor: usize,
    only: &[&str],
    subset_rng: Option<&mut StreamRng>,
) -> GradCheckReport
where
    F: FnMut(&ParamSet<f64>) -> f64,
{
    let layout: Vec<(String, usize)> = params
        .tensors()
        .iter()
        .map(|(m, xs)| (m.name.clone(), xs.len()))
        .collect();
    let grad_flat: Vec<Vec<f64>> = analytic.tensors().iter().map(|(_, xs)| xs.to_vec()).collect();

    let mut local_rng = subset_rng;
    let mut groups = Vec::new();
    for (t_idx, (name, len)) in layout.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let coords: Vec<usize> = if max_coords_per_tensor == 0 || *len <= max_coords_per_tensor {
            (0..*len).collect()
        } else {
            let rng = local_rng
                .as_deref_mut()
                .expect("coordinate subsetting needs an rng");
            let mut picked: Vec<usize> =
                (0..max_coords_per_tensor).map(|_| rng.gen_range(0..*len)).collect();
            picked.sort_unstable();
            picked.dedup();
            picked
        };

        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for &c in &coords {
            let original = params.tensors_mut()[t_idx].1[c];
            params.tensors_mut()[t_idx].1[c] = original + step;
            let up = loss(params);
            params.tensors_mut()[t_idx].1[c] = original - step;
            let down = loss(params);
            params.tensors_mut()[t_idx].1[c] = original;
            let fd = (up - down) / (2.0 * step);
            let g = grad_flat[t_idx][c];
            max_rel = max_rel.max(rel_err(g, fd));
            max_abs = max_abs.max((g - fd).abs());
        }
        groups.push(GroupReport {
            name: name.clone(),
            coords_checked: coords.len(),
            max_rel_err: max_rel,
            max_abs_err: max_abs,
        });
    }
    GradCheckReport { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{ModelDims, ParamSet};
    use crate::rng::{stream, StreamId};

    /// quadratic pseudo-loss: sum of squares of every coordinate
    fn quad_loss(p: &ParamSet<f64>) -> f64 {
        p.tensors()
            .iter()
            .flat_map(|(_, xs)| xs.iter())
            .map(|x| 0.5 * x * x)
            .sum()
    }

    #[test]
    fn quadratic_loss_matches_identity_gradient() {
        let dims = ModelDims { input_dim: 2, hidden_dim: 3, synth_heads: 1 };
        let mut rng = stream(1, StreamId::ParamInit);
        let mut params = ParamSet::init(&dims, &mut rng);
        let analytic = params.clone(); // d(0.5 x^2)/dx = x
        let report =
            finite_diff_report(&mut params, &analytic, quad_loss, 1e-5, 0, &[], None);
        assert!(report.max_rel_err() < 1e-8, "{}", report.render());
        assert_eq!(report.groups.len(), params.tensors().len());
    }

    #[test]
    fn corrupted_gradient_is_flagged_in_its_group() {
        let dims = ModelDims { input_dim: 2, hidden_dim: 3, synth_heads: 1 };
        let mut rng = stream(2, StreamId::ParamInit);
        let mut params = ParamSet::init(&dims, &mut rng);
        let mut analytic = params.clone();
        for x in &mut analytic.layer1.a_self {
            *x *= 2.5;
        }
        let report =
            finite_diff_report(&mut params, &analytic, quad_loss, 1e-5, 0, &[], None);
        let bad = report.groups.iter().find(|g| g.name == "enc1.a_self").unwrap();
        assert!(bad.max_rel_err > 1e-2, "corruption not flagged: {}", report.render());
        let good = report.groups.iter().find(|g| g.name == "enc2.w_self").unwrap();
        assert!(good.max_rel_err < 1e-8);
    }

    #[test]
    fn empty_selection_gives_empty_report() {
        let dims = ModelDims { input_dim: 2, hidden_dim: 3, synth_heads: 1 };
        let mut params: ParamSet<f64> = ParamSet::zeros(&dims);
        let analytic = ParamSet::zeros(&dims);
        let report = finite_diff_report(
            &mut params,
            &analytic,
            quad_loss,
            1e-5,
            0,
            &["no_such_tensor"],
            None,
        );
        assert!(report.groups.is_empty());
        assert_eq!(report.max_rel_err(), 0.0);
    }

    #[test]
    fn subsetting_checks_at_most_the_cap() {
        let dims = ModelDims { input_dim: 8, hidden_dim: 8, synth_heads: 1 };
        let mut rng = stream(3, StreamId::ParamInit);
        let mut params = ParamSet::init(&dims, &mut rng);
        let analytic = params.clone();
        let mut srng = stream(4, StreamId::ParamInit);
        let report = finite_diff_report(
            &mut params,
            &analytic,
            quad_loss,
            1e-5,
            5,
            &["enc1.w_self"],
            Some(&mut srng),
        );
        assert_eq!(report.groups.len(), 1);
        assert!(report.groups[0].coords_checked <= 5);
        assert!(report.groups[0].coords_checked >= 1);
    }
}
