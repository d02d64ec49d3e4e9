//! VCF subset: `#CHROM` header, GT field only, strictly phased `a|b` calls.
//! Each haplotype becomes one sample column named `<sample>_<phase>`.
//! All other VCF machinery (INFO, QUAL, filters, unphased or missing calls)
//! is out of scope and rejected where it would change the data.

use super::{valid_token, AlleleMatrix};
use crate::error::{Error, Result};

const FIXED_COLUMNS: [&str; 9] = [
    "#CHROM", "POS", "ID", "REF", "ALT", "QUAL", "FILTER", "INFO", "FORMAT",
];

pub fn parse(text: &str) -> Result<AlleleMatrix> {
    let mut header: Option<(usize, Vec<String>)> = None;
    let mut site_ids: Vec<String> = Vec::new();
    let mut decls: Vec<Vec<String>> = Vec::new();
    let mut rows: Vec<Vec<String>> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with("##") || line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 10 || fields[..9] != FIXED_COLUMNS {
                return Err(Error::parse(
                    line_no,
                    "expected `#CHROM POS ID REF ALT QUAL FILTER INFO FORMAT <samples...>`",
                ));
            }
            let mut ids = Vec::new();
            for name in &fields[9..] {
                if !valid_token(name) {
                    return Err(Error::parse(line_no, format!("invalid sample name `{name}`")));
                }
                ids.push(format!("{name}_0"));
                ids.push(format!("{name}_1"));
            }
            header = Some((fields.len(), ids));
            continue;
        }
        let (n_cols, _) = header
            .as_ref()
            .ok_or_else(|| Error::parse(line_no, "data line before #CHROM header"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != *n_cols {
            return Err(Error::parse(
                line_no,
                format!("expected {n_cols} columns, found {}", fields.len()),
            ));
        }
        let (chrom, pos, id, reference, alt, format) =
            (fields[0], fields[1], fields[2], fields[3], fields[4], fields[8]);
        if format.split(':').next() != Some("GT") {
            return Err(Error::parse(line_no, "FORMAT must lead with GT"));
        }
        if !valid_token(reference) {
            return Err(Error::parse(line_no, format!("invalid REF `{reference}`")));
        }
        let mut decl: Vec<String> = vec![reference.to_string()];
        if alt != "." {
            for a in alt.split(',') {
                if !valid_token(a) {
                    return Err(Error::parse(line_no, format!("invalid ALT `{a}`")));
                }
                decl.push(a.to_string());
            }
        }
        let site_id = if id != "." {
            id.to_string()
        } else {
            format!("{chrom}.{pos}")
        };
        if !valid_token(&site_id) {
            return Err(Error::parse(line_no, format!("invalid site id `{site_id}`")));
        }

        let mut row: Vec<String> = Vec::with_capacity(2 * (n_cols - 9));
        for call in &fields[9..] {
            let gt = call.split(':').next().unwrap_or("");
            if gt.contains('/') {
                return Err(Error::parse(
                    line_no,
                    format!("unphased genotype `{gt}`; only `|`-phased calls are supported"),
                ));
            }
            let alleles: Vec<&str> = gt.split('|').collect();
            if alleles.len() != 2 {
                return Err(Error::parse(
                    line_no,
                    format!("expected two phased alleles, found `{gt}`"),
                ));
            }
            for a in alleles {
                let idx: usize = a.parse().map_err(|_| {
                    Error::parse(line_no, format!("bad allele index `{a}` in `{gt}`"))
                })?;
                let tok = decl.get(idx).ok_or_else(|| {
                    Error::parse(
                        line_no,
                        format!("allele index {idx} out of range for REF/ALT list"),
                    )
                })?;
                row.push(tok.clone());
            }
        }
        site_ids.push(site_id);
        decls.push(decl);
        rows.push(row);
    }

    let (_, sample_ids) = header.ok_or_else(|| Error::parse(1, "missing #CHROM header"))?;
    if site_ids.is_empty() {
        return Err(Error::parse(1, "no variant records"));
    }
    AlleleMatrix::from_parts(site_ids, sample_ids, decls, &rows)
}

pub fn write(matrix: &AlleleMatrix) -> Result<String> {
    let pairs = phased_pairs(matrix)?;
    let mut out = String::from("##fileformat=VCFv4.2\n");
    out.push_str(&FIXED_COLUMNS.join("\t"));
    for name in &pairs {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');

    for j in 0..matrix.sites() {
        let decl = matrix.site_decl(j);
        let reference = matrix.token(decl[0]);
        let alt = if decl.len() == 1 {
            ".".to_string()
        } else {
            decl[1..]
                .iter()
                .map(|&t| matrix.token(t))
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&format!(
            "1\t{}\t{}\t{}\t{}\t.\t.\t.\tGT",
            j + 1,
            matrix.site_ids()[j],
            reference,
            alt
        ));
        for pair in 0..pairs.len() {
            let a = allele_index(matrix, j, 2 * pair)?;
            let b = allele_index(matrix, j, 2 * pair + 1)?;
            out.push_str(&format!("\t{a}|{b}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Group haplotype columns back into diploid samples: consecutive columns
/// must be named `<base>_0`, `<base>_1`.
fn phased_pairs(matrix: &AlleleMatrix) -> Result<Vec<String>> {
    let ids = matrix.sample_ids();
    if ids.len() % 2 != 0 {
        return Err(Error::Unwritable {
            format: "VCF".into(),
            reason: "odd number of haplotype columns".into(),
        });
    }
    let mut pairs = Vec::with_capacity(ids.len() / 2);
    for chunk in ids.chunks(2) {
        let (a, b) = (&chunk[0], &chunk[1]);
        match (a.strip_suffix("_0"), b.strip_suffix("_1")) {
            (Some(base_a), Some(base_b)) if base_a == base_b => pairs.push(base_a.to_string()),
            _ => {
                return Err(Error::Unwritable {
                    format: "VCF".into(),
                    reason: format!("columns `{a}`, `{b}` do not form a `<sample>_0/_1` pair"),
                })
            }
        }
    }
    Ok(pairs)
}

fn allele_index(matrix: &AlleleMatrix, site: usize, sample: usize) -> Result<usize> {
    let token = matrix.cell(site, sample);
    matrix
        .site_decl(site)
        .iter()
        .position(|&t| t == token)
        .ok_or_else(|| Error::Unwritable {
            format: "VCF".into(),
            reason: format!("cell token not in declared alleles at site {site}"),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "##fileformat=VCFv4.2\n\
        #CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\tNA1\tNA2\n\
        1\t1\trs1\tA\tG\t.\t.\t.\tGT\t0|1\t1|1\n\
        1\t2\trs2\tT\tC,TTA\t.\t.\t.\tGT\t0|2\t1|0\n";

    #[test]
    fn splits_phased_genotypes_into_haplotype_columns() {
        let m = parse(SAMPLE).unwrap();
        assert_eq!(m.samples(), 4);
        assert_eq!(
            m.sample_ids(),
            &["NA1_0", "NA1_1", "NA2_0", "NA2_1"]
        );
        assert_eq!(m.cell_token(0, 0), "A");
        assert_eq!(m.cell_token(0, 1), "G");
        assert_eq!(m.cell_token(1, 1), "TTA");
        assert_eq!(m.cell_token(1, 2), "C");
    }

    #[test]
    fn write_then_parse_is_identity() {
        let m = parse(SAMPLE).unwrap();
        let text = write(&m).unwrap();
        assert_eq!(parse(&text).unwrap(), m);
        // The writer is canonical, so this sample round-trips byte-exactly.
        assert_eq!(text, SAMPLE);
    }

    #[test]
    fn unphased_calls_are_rejected_with_line_number() {
        let text = SAMPLE.replace("0|1", "0/1");
        match parse(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("unphased"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn allele_index_out_of_range_is_rejected() {
        let text = SAMPLE.replace("0|1", "0|3");
        assert!(parse(&text).is_err());
    }

    #[test]
    fn unpairable_columns_cannot_be_written() {
        let m = AlleleMatrix::from_rows(
            vec!["s".into()],
            vec!["a".into(), "b".into()],
            &[vec!["A", "G"]],
        )
        .unwrap();
        assert!(matches!(write(&m), Err(Error::Unwritable { .. })));
    }
}
