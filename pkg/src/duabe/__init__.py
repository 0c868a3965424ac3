"""DU-ABE: ciphertext-policy attribute-based encryption run by its own data users."""

from .group import (
    G1Element,
    G2Element,
    GroupParams,
    GtElement,
    Scalar,
    hash_to_g1,
    pairing,
    random_gt,
    random_scalar,
)
from .policy import (
    AccessMatrix,
    ReconstructionPlan,
    compile_policy,
    find_reconstruction,
    parse_policy,
    policy_to_lsss,
    satisfying_subsets_bruteforce,
)
from .scheme import (
    AttributePublicKey,
    Ciphertext,
    GlobalParams,
    KeyShare,
    MasterKeyShare,
    PublicKeyShare,
    UserSecretKey,
    aggregate_public_key,
    aggregate_secret_key,
    authority_setup,
    decrypt,
    encrypt,
    global_setup,
    keygen_share,
    verify_key_share,
)
from .kem import open_sealed, seal

__version__ = "0.1.0"
