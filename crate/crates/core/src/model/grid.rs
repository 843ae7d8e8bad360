use super::ModelConfig;

/// One row of the ablation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationCase {
    pub case_id: u32,
    pub description: &'static str,
    pub config: ModelConfig,
}

/// The ten ablation variants, derived from `base` (normally the flagship
/// configuration for the dataset at hand).
///
/// | # | variant |
/// |---|---------|
/// | 1 | ResNet-1D only |
/// | 2 | BiGRU-MHA, 4 heads |
/// | 3 | ResNet-1D-BiGRU, no attention |
/// | 4 | full model, 2 heads |
/// | 5 | full model, 4 heads, dropout 0.5 (flagship) |
/// | 6 | full model, 8 heads |
/// | 7 | dropout 0.3 |
/// | 8 | dropout 0.7 |
/// | 9 | one hidden dense layer fewer |
/// | 10 | flagship without SMOTE |
pub fn ablation_grid(base: &ModelConfig) -> Vec<AblationCase> {
    let flagship = ModelConfig {
        use_resnet_block: true,
        use_bigru: true,
        use_mha: true,
        num_heads: 4,
        dropout_rate: 0.5,
        use_smote: true,
        ..base.clone()
    };
    let with = |f: &dyn Fn(&mut ModelConfig)| {
        let mut c = flagship.clone();
        f(&mut c);
        c
    };
    let case = |case_id, description, config| AblationCase {
        case_id,
        description,
        config,
    };
    vec![
        case(1, "ResNet-1D", with(&|c| {
            c.use_bigru = false;
            c.use_mha = false;
        })),
        case(2, "BiGRU-MHA", with(&|c| c.use_resnet_block = false)),
        case(3, "ResNet-1D-BiGRU", with(&|c| c.use_mha = false)),
        case(4, "ResNet-1D-BiGRU-MHA", with(&|c| c.num_heads = 2)),
        case(5, "ResNet-1D-BiGRU-MHA", flagship.clone()),
        case(6, "ResNet-1D-BiGRU-MHA", with(&|c| c.num_heads = 8)),
        case(7, "ResNet-1D-BiGRU-MHA", with(&|c| c.dropout_rate = 0.3)),
        case(8, "ResNet-1D-BiGRU-MHA", with(&|c| c.dropout_rate = 0.7)),
        case(9, "ResNet-1D-BiGRU-MHA with only 2 dense layers", with(&|c| {
            c.dense_units.truncate(c.dense_units.len().saturating_sub(1));
        })),
        case(10, "ResNet-1D-BiGRU-MHA without SMOTE technique", with(&|c| c.use_smote = false)),
    ]
}

/// [`ablation_grid`] over the default 60-feature, 6-class flagship.
pub fn default_grid() -> Vec<(u32, ModelConfig)> {
    ablation_grid(&ModelConfig::default())
        .into_iter()
        .map(|c| (c.case_id, c.config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(id: u32) -> ModelConfig {
        default_grid().into_iter().find(|(i, _)| *i == id).unwrap().1
    }

    #[test]
    fn ten_cases_in_order() {
        let ids: Vec<u32> = default_grid().iter().map(|(i, _)| *i).collect();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());
        assert!(default_grid().iter().all(|(_, c)| c.validate().is_ok()));
    }

    #[test]
    fn case5_is_the_flagship() {
        assert_eq!(get(5), ModelConfig::default());
    }

    #[test]
    fn case6_differs_only_in_heads() {
        let mut c6 = get(6);
        assert_eq!((c6.num_heads, get(5).num_heads), (8, 4));
        c6.num_heads = 4;
        assert_eq!(c6, get(5));
    }

    #[test]
    fn case10_differs_only_in_smote() {
        let mut c10 = get(10);
        assert!(!c10.use_smote);
        c10.use_smote = true;
        assert_eq!(c10, get(5));
    }

    #[test]
    fn case9_drops_one_hidden_dense_layer() {
        assert_eq!(get(9).dense_units.len() + 1, get(5).dense_units.len());
        assert_eq!(get(9).dense_units, vec![64]);
    }

    #[test]
    fn structural_cases() {
        let c1 = get(1);
        assert!(c1.use_resnet_block && !c1.use_bigru && !c1.use_mha);
        let c2 = get(2);
        assert!(!c2.use_resnet_block && c2.use_bigru && c2.use_mha && c2.num_heads == 4);
        let c3 = get(3);
        assert!(c3.use_resnet_block && c3.use_bigru && !c3.use_mha);
        assert_eq!(get(4).num_heads, 2);
        assert_eq!(get(7).dropout_rate, 0.3);
        assert_eq!(get(8).dropout_rate, 0.7);
    }
}
