//! Cluster model files: magic `CVCL`, version, a JSON header with the
//! configuration and scalar fields, then the medoid, support-vector and
//! coefficient blobs as little-endian f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterConfig, ClusterError, ClusterModel, OcSvmModel, Result, SvmModel};
use crate::binio;

const MAGIC: &[u8; 4] = b"CVCL";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ClusterConfig,
    dim: usize,
    kept_cluster_ids: Vec<usize>,
    svm_class_ids: Vec<usize>,
    svm_rho: Vec<f64>,
    svm_gamma: f64,
    svm_c: f64,
    svm_n_support: usize,
    svm_max_violation: f64,
    oc_gamma: f64,
    oc_nu: f64,
    oc_rho: f64,
    oc_scale: f64,
    oc_n_support: usize,
    oc_max_violation: f64,
}

pub fn save_cluster_model(path: &Path, m: &ClusterModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    binio::write_u32(&mut w, VERSION)?;
    let h = Header {
        config: m.config.clone(),
        dim: m.dim,
        kept_cluster_ids: m.kept_cluster_ids.clone(),
        svm_class_ids: m.svm.class_ids.clone(),
        svm_rho: m.svm.rho.clone(),
        svm_gamma: m.svm.gamma,
        svm_c: m.svm.c,
        svm_n_support: m.svm.n_support(),
        svm_max_violation: m.svm.max_violation,
        oc_gamma: m.ocsvm.gamma,
        oc_nu: m.ocsvm.nu,
        oc_rho: m.ocsvm.rho,
        oc_scale: m.ocsvm.scale,
        oc_n_support: m.ocsvm.coef.len(),
        oc_max_violation: m.ocsvm.max_violation,
    };
    binio::write_json(&mut w, &h)?;
    for blob in [&m.medoids, &m.svm.support, &m.svm.coef, &m.ocsvm.support, &m.ocsvm.coef] {
        binio::write_f64s(&mut w, blob)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_cluster_model(path: &Path) -> Result<ClusterModel> {
    let mut r = BufReader::new(File::open(path)?);
    binio::expect_magic(&mut r, MAGIC).map_err(|e| ClusterError::Format(e.to_string()))?;
    let v = binio::read_u32(&mut r)?;
    if v != VERSION {
        return Err(ClusterError::Format(format!("unsupported version {v}")));
    }
    let h: Header = binio::read_json(&mut r)?;
    let nc = h.svm_class_ids.len();
    let medoids = binio::read_f64s(&mut r, h.kept_cluster_ids.len() * h.dim)?;
    let support = binio::read_f64s(&mut r, h.svm_n_support * h.dim)?;
    let coef = binio::read_f64s(&mut r, nc * h.svm_n_support)?;
    let oc_support = binio::read_f64s(&mut r, h.oc_n_support * h.dim)?;
    let oc_coef = binio::read_f64s(&mut r, h.oc_n_support)?;
    Ok(ClusterModel {
        config: h.config,
        dim: h.dim,
        kept_cluster_ids: h.kept_cluster_ids,
        medoids,
        svm: SvmModel {
            dim: h.dim,
            gamma: h.svm_gamma,
            c: h.svm_c,
            class_ids: h.svm_class_ids,
            support,
            coef,
            rho: h.svm_rho,
            max_violation: h.svm_max_violation,
        },
        ocsvm: OcSvmModel {
            dim: h.dim,
            gamma: h.oc_gamma,
            nu: h.oc_nu,
            support: oc_support,
            coef: oc_coef,
            rho: h.oc_rho,
            scale: h.oc_scale,
            max_violation: h.oc_max_violation,
        },
    })
}
