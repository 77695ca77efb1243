import logging

from celery import shared_task

from .services import lift_payload

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def lift_sample_task(self, payload):
    """
    Lifts one sampled target: payload carries g, h and target as matrix text
    plus p and K. Returns {x, y, valuations} or an error envelope.
    """
    logger.debug(f"lift_sample_task {self.request.id}: target {payload['target']} mod {payload['p']}^{payload['K']}")
    result = lift_payload(payload)
    if 'error' in result:
        logger.info(f"lift_sample_task {self.request.id}: {result['error']['error']['message']}")
    return result
