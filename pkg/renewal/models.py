from django.db import models

STATUS_CHOICES = (
    ('running', 'Выполняется'),
    ('ok', 'Успешно'),
    ('failed', 'Ошибка'),
)


class Run(models.Model):
    scenario = models.CharField(max_length=50)
    seed = models.BigIntegerField(default=0)
    config = models.JSONField(default=dict)
    status = models.CharField(
        max_length=16, choices=STATUS_CHOICES, default='running'
    )
    exit_code = models.PositiveSmallIntegerField(null=True, blank=True)
    output_dir = models.CharField(max_length=500)
    manifest = models.JSONField(default=dict, blank=True)
    started = models.DateTimeField(auto_now_add=True)
    finished = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ('-started',)
        verbose_name_plural = 'Прогоны'
        verbose_name = 'Прогон'

    def __str__(self):
        return f'{self.scenario} (seed={self.seed})'


class Artifact(models.Model):
    run = models.ForeignKey(
        Run,
        on_delete=models.CASCADE,
        related_name='artifacts',
    )
    kind = models.CharField(max_length=20)
    path = models.CharField(max_length=500)
    columns = models.JSONField(default=list, blank=True)
    created = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ('created',)

    def __str__(self):
        return self.path[-50:]
