"""Application dependency container"""

import logging
from dependency_injector import containers, providers

# Configuration imports
from core.infrastructure.config.app_config import AppConfig
from core.infrastructure.config.settings import AppSettings

# Infrastructure imports
from core.infrastructure.cache.plan_cache import PlanCache
from core.infrastructure.persistence.local_plan_repository import LocalPlanRepository
from core.infrastructure.utils.worker_pool import WorkerPool

# Service imports
from core.application.services.benchmark_service import BenchmarkService
from core.application.services.kernel_cases import KernelCaseBuilder
from core.application.services.param_set_service import ParamSetService
from core.application.services.plan_service import PlanService
from core.application.services.report_service import ReportService
from core.application.services.verification_service import VerificationService

logger = logging.getLogger(__name__)


class _AppContainer(containers.DynamicContainer):
    """Instance type for Container, carrying its lifecycle methods"""

    def init_resources(self) -> None:
        """Initialize container resources"""
        try:
            # Ensure directories exist
            self.app_config().ensure_directories()

            # Initialize caches
            self.plan_cache()

            logger.info("Container resources initialized successfully")

        except Exception as e:
            logger.error(f"Error initializing container resources: {e}")
            raise

    def cleanup(self) -> None:
        """Clean up container resources"""
        try:
            self.plan_cache().cleanup()
            self.worker_pool().cleanup()

            logger.info("Container resources cleaned up successfully")

        except Exception as e:
            logger.error(f"Error cleaning up container resources: {e}")


class Container(containers.DeclarativeContainer):
    """Main application container for dependency management"""

    instance_type = _AppContainer

    # Core paths, CROSS_KERNELS_HOME or ~/.cross_kernels
    base_dir = providers.Singleton(
        lambda: AppSettings().base_dir
    )

    # Configuration services
    app_config = providers.Singleton(
        AppConfig.create_default,
        base_dir=base_dir
    )

    settings = providers.Factory(
        lambda config: config.settings,
        config=app_config
    )

    # Infrastructure services
    worker_pool = providers.Singleton(
        WorkerPool,
        num_workers=settings.provided.threads,
        name="Kernel"
    )

    plan_repository = providers.Singleton(
        LocalPlanRepository,
        config=app_config
    )

    plan_cache = providers.Singleton(
        PlanCache,
        repository=plan_repository,
        max_size_mb=settings.provided.max_cache_size_mb,
        enabled=settings.provided.plan_cache_enabled
    )

    # Application service layer
    param_set_service = providers.Singleton(
        ParamSetService
    )

    plan_service = providers.Singleton(
        PlanService,
        plan_cache=plan_cache,
        default_bp=settings.provided.default_bp
    )

    case_builder = providers.Singleton(
        KernelCaseBuilder,
        plan_service=plan_service,
        param_set_service=param_set_service
    )

    verification_service = providers.Singleton(
        VerificationService,
        case_builder=case_builder,
        worker_pool=worker_pool
    )

    benchmark_service = providers.Singleton(
        BenchmarkService,
        case_builder=case_builder,
        worker_pool=worker_pool
    )

    report_service = providers.Singleton(
        ReportService,
        reports_dir=app_config.provided.reports_dir
    )
